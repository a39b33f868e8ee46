#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "icsbed/net/bytes.hpp"
#include "icsbed/net/clock.hpp"
#include "icsbed/net/frame.hpp"

namespace icsbed::observer {

inline constexpr std::uint32_t kPcapMagic = 0xA1B2C3D4;
inline constexpr std::uint32_t kPcapSnaplen = 65535;
inline constexpr std::uint32_t kLinktypeEthernet = 1;
inline constexpr std::size_t kPcapGlobalHeaderLen = 24;
inline constexpr std::size_t kPcapRecordHeaderLen = 16;

/// The 24-byte classic pcap file header, host byte order as tcpdump writes it.
Bytes pcap_global_header();
/// 16-byte record header; timestamps count from virtual time zero.
Bytes pcap_record_header(SimTime ts, std::uint32_t length);

/// Classic libpcap writer (version 2.4, Ethernet, no truncation).
/// Throws std::runtime_error on any I/O failure, and std::logic_error if
/// records arrive out of timestamp order.
class PcapWriter {
public:
    explicit PcapWriter(const std::filesystem::path& path);
    ~PcapWriter();
    PcapWriter(const PcapWriter&) = delete;
    PcapWriter& operator=(const PcapWriter&) = delete;

    void capture(const net::EthernetFrame& frame, SimTime ts);
    void capture_bytes(ByteView frame, SimTime ts);
    void flush();
    void close();

    std::uint64_t records() const { return records_; }
    const std::filesystem::path& path() const { return path_; }

private:
    void write(const void* data, std::size_t n);

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    SimTime last_{0};
    std::uint64_t records_ = 0;
};

struct PcapRecord {
    SimTime ts{0};
    Bytes data;
};

/// Reads a classic pcap file in host byte order, as written above. Throws
/// std::runtime_error on a bad header or a truncated record.
std::vector<PcapRecord> read_pcap(const std::filesystem::path& path);

} // namespace icsbed::observer
