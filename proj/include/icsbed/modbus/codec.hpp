#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "icsbed/net/bytes.hpp"

namespace icsbed::modbus {

inline constexpr std::uint16_t kPort = 502;
inline constexpr std::uint8_t kUnitId = 1;
inline constexpr std::size_t kMbapLen = 7;
inline constexpr std::size_t kMaxAduLen = 260;

inline constexpr std::uint8_t kReadHoldingRegisters = 0x03;
inline constexpr std::uint8_t kWriteMultipleRegisters = 0x10;

inline constexpr std::uint16_t kMaxReadQuantity = 125;
inline constexpr std::uint16_t kMaxWriteQuantity = 123;

enum class ExceptionCode : std::uint8_t {
    IllegalFunction = 0x01,
    IllegalDataAddress = 0x02,
    IllegalDataValue = 0x03,
};

struct MbapHeader {
    std::uint16_t transaction_id = 0;
    std::uint16_t protocol_id = 0;
    std::uint16_t length = 0; // unit id + PDU bytes
    std::uint8_t unit_id = kUnitId;

    bool operator==(const MbapHeader&) const = default;
};

struct ReadHoldingRequest {
    std::uint16_t start = 0;
    std::uint16_t quantity = 0;
    bool operator==(const ReadHoldingRequest&) const = default;
};

struct ReadHoldingResponse {
    std::vector<std::uint16_t> values;
    bool operator==(const ReadHoldingResponse&) const = default;
};

struct WriteMultipleRequest {
    std::uint16_t start = 0;
    std::vector<std::uint16_t> values;
    bool operator==(const WriteMultipleRequest&) const = default;
};

struct WriteMultipleResponse {
    std::uint16_t start = 0;
    std::uint16_t quantity = 0;
    bool operator==(const WriteMultipleResponse&) const = default;
};

struct ExceptionResponse {
    std::uint8_t function = 0; // request function code, without the 0x80 bit
    ExceptionCode code = ExceptionCode::IllegalFunction;
    bool operator==(const ExceptionResponse&) const = default;
};

using Pdu = std::variant<ReadHoldingRequest, ReadHoldingResponse, WriteMultipleRequest, WriteMultipleResponse,
                         ExceptionResponse>;

struct Adu {
    std::uint16_t transaction_id = 0;
    std::uint8_t unit_id = kUnitId;
    Pdu pdu;

    bool operator==(const Adu&) const = default;
};

/// Requests and responses share function codes, so decoding needs to know
/// which side of the conversation the bytes came from.
enum class Direction { Request, Response };

std::uint8_t function_code(const Pdu& pdu);
bool is_request(const Pdu& pdu);

/// Big-endian MBAP + PDU. Throws std::invalid_argument when a PDU violates
/// its quantity limits (read 1..125, write 1..123).
Bytes encode_adu(const Adu& adu);

struct DecodeResult {
    enum class Status { Ok, NeedMore, Error };

    Status status = Status::Error;
    Adu adu;
    std::size_t consumed = 0; // bytes making up this ADU (Ok and Error with a header)
    std::string error;
    std::optional<MbapHeader> header;
    std::uint8_t function = 0;
    /// For well-framed requests that break a protocol rule: the exception a
    /// server should answer with.
    std::optional<ExceptionCode> suggested_exception;

    bool ok() const { return status == Status::Ok; }
};

/// Decodes the first ADU in `bytes`. Never throws; arbitrary input yields
/// Ok, NeedMore or Error.
DecodeResult decode_adu(ByteView bytes, Direction direction);

/// Convenience wrapper that throws DecodeError unless a complete ADU decodes.
Adu decode_adu_or_throw(ByteView bytes, Direction direction);

} // namespace icsbed::modbus
