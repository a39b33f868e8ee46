#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icsbed/modbus/client.hpp"
#include "icsbed/net/clock.hpp"

namespace icsbed::control {

/// How late loop `loop` of a PLC started relative to its release.
struct DelaySample {
    int plc = 1;
    std::uint64_t loop = 0;
    SimTime release{0};
    SimTime start{0};
    Duration delay{0};
};

/// One client-measured Modbus round trip.
struct ResponseSample {
    std::string client;
    std::string server;
    std::uint16_t transaction_id = 0;
    SimTime sent_at{0};
    Duration rtt{0};
    modbus::ClientError error = modbus::ClientError::None;
};

struct TimingMetrics {
    std::vector<DelaySample> delays;
    std::vector<ResponseSample> responses;
};

/// One state-log row: pre-logic sensor readings, post-logic actuator
/// commands and current control values, in the PLC's column order.
struct StateRow {
    int plc = 1;
    std::uint64_t loop = 0;
    SimTime time{0};
    Duration delay{0};
    std::vector<double> values;
};

} // namespace icsbed::control
