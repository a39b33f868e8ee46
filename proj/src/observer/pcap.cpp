#include "icsbed/observer/pcap.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace icsbed::observer {

namespace {

void put32(Bytes& b, std::uint32_t v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    b.insert(b.end(), p, p + 4);
}

void put16(Bytes& b, std::uint16_t v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    b.insert(b.end(), p, p + 2);
}

} // namespace

Bytes pcap_global_header()
{
    Bytes b;
    put32(b, kPcapMagic);
    put16(b, 2);
    put16(b, 4);
    put32(b, 0); // thiszone
    put32(b, 0); // sigfigs
    put32(b, kPcapSnaplen);
    put32(b, kLinktypeEthernet);
    return b;
}

Bytes pcap_record_header(SimTime ts, std::uint32_t length)
{
    const auto us = ts.count();
    Bytes b;
    put32(b, static_cast<std::uint32_t>(us / 1000000));
    put32(b, static_cast<std::uint32_t>(us % 1000000));
    put32(b, length);
    put32(b, length);
    return b;
}

PcapWriter::PcapWriter(const std::filesystem::path& path) : path_(path)
{
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) {
        throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    const auto h = pcap_global_header();
    write(h.data(), h.size());
}

PcapWriter::~PcapWriter()
{
    if (file_) std::fclose(file_);
}

void PcapWriter::write(const void* data, std::size_t n)
{
    if (!file_) {
        throw std::runtime_error(path_.string() + ": write after close");
    }
    if (std::fwrite(data, 1, n, file_) != n) {
        throw std::runtime_error("write to " + path_.string() + " failed: " + std::strerror(errno));
    }
}

void PcapWriter::capture(const net::EthernetFrame& frame, SimTime ts)
{
    const auto bytes = net::encode_frame(frame);
    capture_bytes(bytes, ts);
}

void PcapWriter::capture_bytes(ByteView frame, SimTime ts)
{
    if (ts < last_) {
        throw std::logic_error("pcap records must be in timestamp order");
    }
    if (frame.size() > kPcapSnaplen) {
        throw std::invalid_argument("frame longer than the snap length");
    }
    last_ = ts;
    const auto h = pcap_record_header(ts, static_cast<std::uint32_t>(frame.size()));
    write(h.data(), h.size());
    write(frame.data(), frame.size());
    ++records_;
}

void PcapWriter::flush()
{
    if (file_ && std::fflush(file_) != 0) {
        throw std::runtime_error("flush of " + path_.string() + " failed: " + std::strerror(errno));
    }
}

void PcapWriter::close()
{
    if (!file_) return;
    flush();
    const int rc = std::fclose(file_);
    file_ = nullptr;
    if (rc != 0) {
        throw std::runtime_error("close of " + path_.string() + " failed: " + std::strerror(errno));
    }
}

std::vector<PcapRecord> read_pcap(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto get32 = [&](std::size_t off) {
        std::uint32_t v;
        std::memcpy(&v, all.data() + off, 4);
        return v;
    };
    if (all.size() < kPcapGlobalHeaderLen || get32(0) != kPcapMagic) {
        throw std::runtime_error(path.string() + ": not a classic pcap file");
    }
    if (get32(20) != kLinktypeEthernet) {
        throw std::runtime_error(path.string() + ": link type is not Ethernet");
    }
    std::vector<PcapRecord> out;
    std::size_t off = kPcapGlobalHeaderLen;
    while (off < all.size()) {
        if (all.size() - off < kPcapRecordHeaderLen) {
            throw std::runtime_error(path.string() + ": truncated record header");
        }
        const auto sec = get32(off);
        const auto usec = get32(off + 4);
        const auto incl = get32(off + 8);
        const auto orig = get32(off + 12);
        off += kPcapRecordHeaderLen;
        if (incl != orig || all.size() - off < incl) {
            throw std::runtime_error(path.string() + ": truncated record");
        }
        PcapRecord r;
        r.ts = SimTime{static_cast<std::int64_t>(sec) * 1000000 + usec};
        r.data.assign(all.begin() + static_cast<std::ptrdiff_t>(off), all.begin() + static_cast<std::ptrdiff_t>(off + incl));
        out.push_back(std::move(r));
        off += incl;
    }
    return out;
}

} // namespace icsbed::observer
