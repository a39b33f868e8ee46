#include "operations.hpp"

namespace icsbed::attack {

namespace {

constexpr int kConnectAttempts = 3; // first try plus two retries

/// Many Modbus clients on the attacker node, each reading back to back.
class Ddos final : public Operation {
public:
    using Operation::Operation;

    ~Ddos() override { *token_ = false; }

    void begin() override
    {
        const auto& c = cfg();
        end_ = record().start + c.duration;
        const tcp::Endpoint target{host_ip(c.target), 502};
        modbus::ClientOptions opts;
        opts.timeout = c.request_timeout;
        agents_.resize(static_cast<std::size_t>(c.agents));
        for (auto& a : agents_) {
            a.client = std::make_unique<modbus::ModbusClient>(stack(), target, opts);
        }
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            request(i);
        }
        at(end_, [this] { stop(); });
    }

    void cut_short() override
    {
        stopped_ = true;
        publish();
    }

private:
    struct Agent {
        std::unique_ptr<modbus::ModbusClient> client;
        int connect_failures = 0;
    };

    void request(std::size_t i)
    {
        if (stopped_ || now() >= end_) return;
        ++sent_;
        std::weak_ptr<bool> alive = token_;
        agents_[i].client->read(cfg().read_address, cfg().read_quantity, [this, alive, i](const modbus::ClientResult& r) {
            if (alive.expired() || stopped_) return;
            auto& a = agents_[i];
            switch (r.error) {
            case modbus::ClientError::None:
            case modbus::ClientError::Exception: ++answered_; break;
            case modbus::ClientError::Timeout: ++timeouts_; break;
            case modbus::ClientError::ConnectFailed:
                ++connect_failures_;
                if (++a.connect_failures >= kConnectAttempts) {
                    ++idle_agents_;
                    return;
                }
                break;
            case modbus::ClientError::Disconnected: ++timeouts_; break;
            }
            request(i);
        });
    }

    void stop()
    {
        stopped_ = true;
        for (auto& a : agents_) a.client->disconnect();
        publish();
        finish(now());
    }

    void publish()
    {
        record().outcome = {{"agents", agents_.size()},
                            {"requests_sent", sent_},
                            {"responses", answered_},
                            {"timeouts", timeouts_},
                            {"connect_failures", connect_failures_},
                            {"idle_agents", idle_agents_}};
    }

    SimTime end_{0};
    bool stopped_ = false;
    std::vector<Agent> agents_;
    std::uint64_t sent_ = 0;
    std::uint64_t answered_ = 0;
    std::uint64_t timeouts_ = 0;
    std::uint64_t connect_failures_ = 0;
    std::uint64_t idle_agents_ = 0;
    std::shared_ptr<bool> token_ = std::make_shared<bool>(true);
};

} // namespace

std::unique_ptr<Operation> make_ddos(Attacker& a, int id)
{
    return std::make_unique<Ddos>(a, id);
}

} // namespace icsbed::attack
