#include "icsbed/attack/attacker.hpp"

#include <algorithm>
#include <stdexcept>

#include "icsbed/physics/plant.hpp"
#include "icsbed/tcp/segment.hpp"
#include "operations.hpp"

namespace icsbed::attack {

using nlohmann::json;

json to_json(const AttackRecord& r)
{
    json j{{"id", r.id},
           {"kind", to_string(r.config.kind)},
           {"params", to_json(r.config)},
           {"start", r.start.count()},
           {"end", r.end ? json(r.end->count()) : json(nullptr)},
           {"outcome", r.outcome},
           {"truncated", r.truncated}};
    return j;
}

void Operation::at(SimTime t, std::function<void()> fn)
{
    std::weak_ptr<bool> alive = owner_.alive_;
    owner_.stack_.events().schedule(std::max(t, now()), [alive, fn = std::move(fn)] {
        if (!alive.expired()) fn();
    });
}

void Operation::finish(SimTime end)
{
    if (done_) return;
    done_ = true;
    owner_.close_record(id_, end, false);
}

Attacker::Attacker(net::Nic& nic, tcp::TcpStack& stack, const control::SignalMap& signals,
                   std::vector<HostInfo> hosts, physics::Plant* plant, Rng rng)
    : nic_(nic), stack_(stack), signals_(signals), hosts_(std::move(hosts)), plant_(plant), rng_(rng)
{
    std::weak_ptr<bool> alive = alive_;
    nic_.set_forward_handler([this, alive](const net::EthernetFrame& f, const net::Ipv4Packet& p) {
        if (!alive.expired()) forward(f, p);
    });
}

Attacker::~Attacker()
{
    *alive_ = false;
    nic_.set_forward_handler({});
}

std::optional<net::Ipv4Addr> Attacker::resolve_host(const std::string& name_or_ip) const
{
    for (const auto& h : hosts_) {
        if (h.name == name_or_ip) return h.ip;
    }
    try {
        return net::Ipv4Addr::parse(name_or_ip);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

int Attacker::plc_at(net::Ipv4Addr ip) const
{
    for (const auto& h : hosts_) {
        if (h.ip == ip) return h.plc;
    }
    return 0;
}

int Attacker::launch(AttackConfig cfg)
{
    validate_attack(cfg, signals_, [this](const std::string& h) { return resolve_host(h).has_value(); });
    if (cfg.kind == AttackKind::SensorDegradation && plant_ == nullptr) {
        throw std::invalid_argument("attack.signal: no plant attached to degrade");
    }
    const SimTime now = stack_.events().now();
    if (cfg.start < now) {
        cfg.start = now;
    }
    const int id = static_cast<int>(records_.size()) + 1;
    AttackRecord rec;
    rec.id = id;
    rec.config = cfg;
    rec.start = cfg.start;
    records_.push_back(std::move(rec));

    std::unique_ptr<Operation> op;
    switch (cfg.kind) {
    case AttackKind::Recon: op = make_recon(*this, id); break;
    case AttackKind::Ddos: op = make_ddos(*this, id); break;
    case AttackKind::Mitm: op = make_mitm(*this, id); break;
    case AttackKind::Replay: op = make_replay(*this, id); break;
    case AttackKind::SensorDegradation: op = make_sensor(*this, id); break;
    }
    Operation* raw = op.get();
    ops_.push_back(std::move(op));
    std::weak_ptr<bool> alive = alive_;
    stack_.events().schedule(cfg.start, [this, alive, raw, id] {
        if (alive.expired()) return;
        emit("attack " + std::to_string(id) + " (" + to_string(records_[id - 1].config.kind) + ") started");
        raw->begin();
    });
    return id;
}

const AttackRecord& Attacker::record(int id) const
{
    if (id < 1 || static_cast<std::size_t>(id) > records_.size()) {
        throw std::out_of_range("no attack record " + std::to_string(id));
    }
    return records_[static_cast<std::size_t>(id - 1)];
}

std::vector<int> Attacker::active() const
{
    std::vector<int> out;
    const SimTime now = stack_.events().now();
    for (const auto& r : records_) {
        if (!r.finished() && r.start <= now) out.push_back(r.id);
    }
    return out;
}

const std::vector<SniffedPayload>& Attacker::sniffed(int id) const
{
    static const std::vector<SniffedPayload> none;
    (void)record(id);
    const auto* p = replay_payloads(*ops_[static_cast<std::size_t>(id - 1)]);
    return p ? *p : none;
}

void Attacker::close_record(int id, SimTime end, bool truncated)
{
    auto& r = records_[static_cast<std::size_t>(id - 1)];
    if (r.finished()) return;
    r.end = std::max(end, r.start);
    r.truncated = truncated;
    emit("attack " + std::to_string(id) + " (" + to_string(r.config.kind) + ") ended" +
         (truncated ? " (truncated)" : ""));
    if (record_sink_) record_sink_(r);
}

void Attacker::finalize(SimTime run_end)
{
    for (auto& op : ops_) {
        auto& r = records_[static_cast<std::size_t>(op->id() - 1)];
        if (r.finished()) continue;
        op->cut_short();
        const bool open_ended = r.config.kind == AttackKind::SensorDegradation && r.config.duration == Duration{0};
        close_record(op->id(), run_end, !open_ended);
    }
}

void Attacker::emit(const std::string& message)
{
    if (event_sink_) event_sink_(nic_.name(), message);
}

std::optional<net::MacAddr> Attacker::true_mac(net::Ipv4Addr ip) const
{
    if (auto it = true_macs_.find(ip); it != true_macs_.end()) return it->second;
    return nic_.cached(ip);
}

void Attacker::forward(const net::EthernetFrame& frame, const net::Ipv4Packet& packet)
{
    net::EthernetFrame out = frame;
    const auto& h = packet.header;
    Bytes& ip = out.payload;
    const std::size_t total = std::min<std::size_t>(h.total_length, ip.size());
    if (h.protocol == net::kIpProtoTcp && total >= net::kIpv4HeaderLen + tcp::kTcpHeaderLen) {
        const std::size_t tcp_off = net::kIpv4HeaderLen;
        const std::size_t doff = static_cast<std::size_t>(ip[tcp_off + 12] >> 4) * 4;
        if (doff >= tcp::kTcpHeaderLen && tcp_off + doff <= total) {
            Diverted d{stack_.events().now(),
                       h.src,
                       h.dst,
                       static_cast<std::uint16_t>((ip[tcp_off] << 8) | ip[tcp_off + 1]),
                       static_cast<std::uint16_t>((ip[tcp_off + 2] << 8) | ip[tcp_off + 3]),
                       tcp_off,
                       tcp_off + doff,
                       total - tcp_off - doff,
                       ip};
            for (auto& op : ops_) {
                if (!op->done() && op->intercepting()) op->intercept(d);
            }
            if (d.mutated) {
                Bytes seg(ip.begin() + static_cast<std::ptrdiff_t>(tcp_off), ip.begin() + static_cast<std::ptrdiff_t>(total));
                tcp::refresh_checksum(seg, h.src, h.dst);
                std::copy(seg.begin(), seg.end(), ip.begin() + static_cast<std::ptrdiff_t>(tcp_off));
            }
        }
    }
    const auto mac = true_mac(h.dst);
    if (!mac) {
        ++fwd_.dropped_unresolved;
        return;
    }
    out.dst = *mac;
    out.src = nic_.mac();
    ++fwd_.forwarded;
    nic_.send_frame(std::move(out));
}

namespace {

class SensorDegradation final : public Operation {
public:
    using Operation::Operation;

    void begin() override
    {
        const auto& c = cfg();
        previous_ = plant()->sensor_error(c.signal);
        plant()->set_sensor_error(c.signal, c.error_fraction);
        record().outcome = {{"signal", c.signal}, {"previous_error", previous_}, {"error", c.error_fraction}};
        if (c.duration > Duration{0}) {
            at(record().start + c.duration, [this] {
                plant()->clear_sensor_error(cfg().signal);
                finish(now());
            });
        }
    }

private:
    double previous_ = 0.0;
};

} // namespace

std::unique_ptr<Operation> make_sensor(Attacker& a, int id)
{
    return std::make_unique<SensorDegradation>(a, id);
}

} // namespace icsbed::attack
