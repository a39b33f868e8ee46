#include "icsbed/modbus/register_file.hpp"

#include <stdexcept>
#include <string>

namespace icsbed::modbus {

void RegisterFile::map_range(std::uint16_t start, std::uint16_t count, bool writable)
{
    for (std::uint32_t a = start; a < std::uint32_t{start} + count; ++a) {
        cells_[static_cast<std::uint16_t>(a)] = Cell{0, writable};
    }
}

bool RegisterFile::writable(std::uint16_t address) const
{
    auto it = cells_.find(address);
    return it != cells_.end() && it->second.writable;
}

std::variant<std::vector<std::uint16_t>, ExceptionCode> RegisterFile::read(std::uint16_t start,
                                                                          std::uint16_t quantity) const
{
    if (quantity < 1 || quantity > kMaxReadQuantity) {
        return ExceptionCode::IllegalDataValue;
    }
    std::vector<std::uint16_t> out;
    out.reserve(quantity);
    for (std::uint32_t a = start; a < std::uint32_t{start} + quantity; ++a) {
        auto it = cells_.find(static_cast<std::uint16_t>(a));
        if (a > 0xFFFF || it == cells_.end()) {
            return ExceptionCode::IllegalDataAddress;
        }
        out.push_back(it->second.value);
    }
    return out;
}

std::optional<ExceptionCode> RegisterFile::write(std::uint16_t start, const std::vector<std::uint16_t>& values)
{
    if (values.empty() || values.size() > kMaxWriteQuantity) {
        return ExceptionCode::IllegalDataValue;
    }
    for (std::uint32_t a = start; a < start + values.size(); ++a) {
        if (a > 0xFFFF || !writable(static_cast<std::uint16_t>(a))) {
            return ExceptionCode::IllegalDataAddress;
        }
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        cells_[static_cast<std::uint16_t>(start + i)].value = values[i];
    }
    return std::nullopt;
}

void RegisterFile::store(std::uint16_t start, std::span<const std::uint16_t> values)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto it = cells_.find(static_cast<std::uint16_t>(start + i));
        if (it == cells_.end()) {
            throw std::out_of_range("register " + std::to_string(start + i) + " is not mapped");
        }
        it->second.value = values[i];
    }
}

std::uint16_t RegisterFile::load(std::uint16_t address) const
{
    auto it = cells_.find(address);
    if (it == cells_.end()) {
        throw std::out_of_range("register " + std::to_string(address) + " is not mapped");
    }
    return it->second.value;
}

Adu server_handle(RegisterFile& registers, const Adu& request)
{
    Adu resp;
    resp.transaction_id = request.transaction_id;
    resp.unit_id = request.unit_id;
    if (const auto* rd = std::get_if<ReadHoldingRequest>(&request.pdu)) {
        auto result = registers.read(rd->start, rd->quantity);
        if (auto* code = std::get_if<ExceptionCode>(&result)) {
            resp.pdu = ExceptionResponse{kReadHoldingRegisters, *code};
        } else {
            resp.pdu = ReadHoldingResponse{std::get<std::vector<std::uint16_t>>(std::move(result))};
        }
    } else if (const auto* wr = std::get_if<WriteMultipleRequest>(&request.pdu)) {
        if (auto code = registers.write(wr->start, wr->values)) {
            resp.pdu = ExceptionResponse{kWriteMultipleRegisters, *code};
        } else {
            resp.pdu = WriteMultipleResponse{wr->start, static_cast<std::uint16_t>(wr->values.size())};
        }
    } else {
        // A response PDU arriving at a server.
        resp.pdu = ExceptionResponse{static_cast<std::uint8_t>(function_code(request.pdu) & 0x7F),
                                     ExceptionCode::IllegalFunction};
    }
    return resp;
}

} // namespace icsbed::modbus
