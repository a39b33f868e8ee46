#include "icsbed/modbus/codec.hpp"

#include <stdexcept>

namespace icsbed::modbus {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void encode_pdu(Bytes& out, const Pdu& pdu)
{
    std::visit(overloaded{
                   [&](const ReadHoldingRequest& r) {
                       if (r.quantity < 1 || r.quantity > kMaxReadQuantity) {
                           throw std::invalid_argument("read quantity out of range 1..125");
                       }
                       put_u8(out, kReadHoldingRegisters);
                       put_u16(out, r.start);
                       put_u16(out, r.quantity);
                   },
                   [&](const ReadHoldingResponse& r) {
                       if (r.values.empty() || r.values.size() > kMaxReadQuantity) {
                           throw std::invalid_argument("read response register count out of range 1..125");
                       }
                       put_u8(out, kReadHoldingRegisters);
                       put_u8(out, static_cast<std::uint8_t>(r.values.size() * 2));
                       for (auto v : r.values) {
                           put_u16(out, v);
                       }
                   },
                   [&](const WriteMultipleRequest& r) {
                       if (r.values.empty() || r.values.size() > kMaxWriteQuantity) {
                           throw std::invalid_argument("write quantity out of range 1..123");
                       }
                       put_u8(out, kWriteMultipleRegisters);
                       put_u16(out, r.start);
                       put_u16(out, static_cast<std::uint16_t>(r.values.size()));
                       put_u8(out, static_cast<std::uint8_t>(r.values.size() * 2));
                       for (auto v : r.values) {
                           put_u16(out, v);
                       }
                   },
                   [&](const WriteMultipleResponse& r) {
                       if (r.quantity < 1 || r.quantity > kMaxWriteQuantity) {
                           throw std::invalid_argument("write response quantity out of range 1..123");
                       }
                       put_u8(out, kWriteMultipleRegisters);
                       put_u16(out, r.start);
                       put_u16(out, r.quantity);
                   },
                   [&](const ExceptionResponse& e) {
                       put_u8(out, static_cast<std::uint8_t>(e.function | 0x80));
                       put_u8(out, static_cast<std::uint8_t>(e.code));
                   },
               },
               pdu);
}

DecodeResult fail(DecodeResult r, std::string why, std::optional<ExceptionCode> suggest = std::nullopt)
{
    r.status = DecodeResult::Status::Error;
    r.error = std::move(why);
    r.suggested_exception = suggest;
    return r;
}

} // namespace

std::uint8_t function_code(const Pdu& pdu)
{
    return std::visit(overloaded{
                          [](const ReadHoldingRequest&) { return kReadHoldingRegisters; },
                          [](const ReadHoldingResponse&) { return kReadHoldingRegisters; },
                          [](const WriteMultipleRequest&) { return kWriteMultipleRegisters; },
                          [](const WriteMultipleResponse&) { return kWriteMultipleRegisters; },
                          [](const ExceptionResponse& e) { return static_cast<std::uint8_t>(e.function | 0x80); },
                      },
                      pdu);
}

bool is_request(const Pdu& pdu)
{
    return std::holds_alternative<ReadHoldingRequest>(pdu) || std::holds_alternative<WriteMultipleRequest>(pdu);
}

Bytes encode_adu(const Adu& adu)
{
    Bytes pdu;
    encode_pdu(pdu, adu.pdu);
    Bytes out;
    out.reserve(kMbapLen + pdu.size());
    put_u16(out, adu.transaction_id);
    put_u16(out, 0);
    put_u16(out, static_cast<std::uint16_t>(pdu.size() + 1));
    put_u8(out, adu.unit_id);
    out.insert(out.end(), pdu.begin(), pdu.end());
    return out;
}

DecodeResult decode_adu(ByteView b, Direction direction)
{
    DecodeResult r;
    if (b.size() < kMbapLen) {
        r.status = DecodeResult::Status::NeedMore;
        return r;
    }
    MbapHeader h;
    h.transaction_id = get_u16(b, 0);
    h.protocol_id = get_u16(b, 2);
    h.length = get_u16(b, 4);
    h.unit_id = b[6];
    if (h.protocol_id != 0) {
        return fail(r, "MBAP protocol id is not 0");
    }
    if (h.length < 2 || h.length > kMaxAduLen - 6) {
        return fail(r, "MBAP length out of range");
    }
    const std::size_t total = 6 + h.length;
    if (b.size() < total) {
        r.status = DecodeResult::Status::NeedMore;
        return r;
    }
    r.header = h;
    r.consumed = total;
    const ByteView pdu = b.subspan(7, h.length - 1);
    const std::uint8_t fc = pdu[0];
    r.function = fc;
    r.adu.transaction_id = h.transaction_id;
    r.adu.unit_id = h.unit_id;

    if (fc & 0x80) {
        if (direction != Direction::Response) {
            return fail(r, "exception function code in a request");
        }
        const std::uint8_t base = fc & 0x7F;
        if (pdu.size() != 2) {
            return fail(r, "exception PDU must be 2 bytes");
        }
        if (pdu[1] < 0x01 || pdu[1] > 0x03) {
            return fail(r, "unsupported exception code");
        }
        r.adu.pdu = ExceptionResponse{base, static_cast<ExceptionCode>(pdu[1])};
        r.status = DecodeResult::Status::Ok;
        return r;
    }

    if (fc != kReadHoldingRegisters && fc != kWriteMultipleRegisters) {
        return fail(r, "unknown function code", ExceptionCode::IllegalFunction);
    }

    if (direction == Direction::Request) {
        if (fc == kReadHoldingRegisters) {
            if (pdu.size() != 5) {
                return fail(r, "read request PDU must be 5 bytes", ExceptionCode::IllegalDataValue);
            }
            const auto qty = get_u16(pdu, 3);
            if (qty < 1 || qty > kMaxReadQuantity) {
                return fail(r, "read quantity out of range 1..125", ExceptionCode::IllegalDataValue);
            }
            r.adu.pdu = ReadHoldingRequest{get_u16(pdu, 1), qty};
        } else {
            if (pdu.size() < 6) {
                return fail(r, "write request PDU too short", ExceptionCode::IllegalDataValue);
            }
            const auto qty = get_u16(pdu, 3);
            const std::size_t byte_count = pdu[5];
            if (qty < 1 || qty > kMaxWriteQuantity || byte_count != qty * 2u || pdu.size() != 6 + byte_count) {
                return fail(r, "write quantity/byte count inconsistent", ExceptionCode::IllegalDataValue);
            }
            WriteMultipleRequest w;
            w.start = get_u16(pdu, 1);
            for (std::size_t i = 0; i < qty; ++i) {
                w.values.push_back(get_u16(pdu, 6 + 2 * i));
            }
            r.adu.pdu = std::move(w);
        }
    } else {
        if (fc == kReadHoldingRegisters) {
            if (pdu.size() < 2) {
                return fail(r, "read response PDU too short");
            }
            const std::size_t byte_count = pdu[1];
            if (byte_count == 0 || byte_count % 2 != 0 || byte_count > 2 * kMaxReadQuantity ||
                pdu.size() != 2 + byte_count) {
                return fail(r, "read response byte count inconsistent");
            }
            ReadHoldingResponse resp;
            for (std::size_t i = 0; i < byte_count / 2; ++i) {
                resp.values.push_back(get_u16(pdu, 2 + 2 * i));
            }
            r.adu.pdu = std::move(resp);
        } else {
            if (pdu.size() != 5) {
                return fail(r, "write response PDU must be 5 bytes");
            }
            const auto qty = get_u16(pdu, 3);
            if (qty < 1 || qty > kMaxWriteQuantity) {
                return fail(r, "write response quantity out of range");
            }
            r.adu.pdu = WriteMultipleResponse{get_u16(pdu, 1), qty};
        }
    }
    r.status = DecodeResult::Status::Ok;
    return r;
}

Adu decode_adu_or_throw(ByteView bytes, Direction direction)
{
    auto r = decode_adu(bytes, direction);
    if (r.status == DecodeResult::Status::NeedMore) {
        throw DecodeError("truncated Modbus ADU");
    }
    if (!r.ok()) {
        throw DecodeError(r.error);
    }
    return r.adu;
}

} // namespace icsbed::modbus
