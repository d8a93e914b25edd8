#pragma once

// Fixed-point codec for actuator command and telemetry frames on the 8-byte
// CAN 2.0 payload.
//
// Command payload (64 bits, big-endian, MSB first):
//   position 16 | velocity 12 | kp 12 | kd 12 | torque 12
// Telemetry payload (40 bits used, remaining 3 bytes zero):
//   position 16 | velocity 12 | torque 12
//
// Quantization: code = floor((x - min) * (2^bits - 1) / (max - min)),
// dequantization: x = min + code * (max - min) / (2^bits - 1).

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdd::protocol {

using Payload = std::array<std::uint8_t, 8>;

struct FieldRange {
  double min;
  double max;
  int bits;

  std::uint32_t max_code() const { return (std::uint32_t{1} << bits) - 1; }
  double step() const { return (max - min) / static_cast<double>(max_code()); }
};

struct CodecRanges {
  FieldRange position{-12.5, 12.5, 16};
  FieldRange velocity{-65.0, 65.0, 12};
  FieldRange torque{-6.0, 6.0, 12};
  FieldRange kp{0.0, 500.0, 12};
  FieldRange kd{0.0, 5.0, 12};
};

struct CommandFrame {
  double torque_setpoint{0};
  double position_setpoint{0};
  double velocity_setpoint{0};
  double kp_field{0};
  double kd_field{0};
};

struct TelemetryFrame {
  double position{0};
  double velocity{0};
  double torque_estimate{0};
};

class CodecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::uint32_t quantize(double x, const FieldRange& range, std::string_view field) {
  if (!(x >= range.min && x <= range.max)) {
    std::ostringstream os;
    os << "field '" << field << "' value " << x << " outside [" << range.min << ", " << range.max
       << "]";
    throw CodecError(os.str());
  }
  const double scaled = (x - range.min) * static_cast<double>(range.max_code()) / (range.max - range.min);
  const auto code = static_cast<std::uint32_t>(std::floor(scaled));
  return code > range.max_code() ? range.max_code() : code;
}

inline double dequantize(std::uint32_t code, const FieldRange& range) {
  return range.min + static_cast<double>(code) * (range.max - range.min) /
                         static_cast<double>(range.max_code());
}

namespace detail {
// MSB-first bit writer over a fixed payload.
class BitPacker {
 public:
  void put(std::uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      if ((value >> i) & 1u) bytes_[static_cast<std::size_t>(pos_ / 8)] |= std::uint8_t(0x80u >> (pos_ % 8));
      ++pos_;
    }
  }
  Payload bytes() const { return bytes_; }

 private:
  Payload bytes_{};
  int pos_{0};
};

class BitReader {
 public:
  explicit BitReader(const Payload& p) : bytes_(p) {}
  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int i = 0; i < bits; ++i) {
      const auto byte = bytes_[static_cast<std::size_t>(pos_ / 8)];
      v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }

 private:
  Payload bytes_;
  int pos_{0};
};

inline Payload to_payload(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 8) {
    throw CodecError("payload must be exactly 8 bytes, got " + std::to_string(bytes.size()));
  }
  Payload p{};
  for (std::size_t i = 0; i < 8; ++i) p[i] = bytes[i];
  return p;
}
}  // namespace detail

inline Payload encode_command(const CommandFrame& f, const CodecRanges& r = {}) {
  detail::BitPacker out;
  out.put(quantize(f.position_setpoint, r.position, "position_setpoint"), r.position.bits);
  out.put(quantize(f.velocity_setpoint, r.velocity, "velocity_setpoint"), r.velocity.bits);
  out.put(quantize(f.kp_field, r.kp, "kp_field"), r.kp.bits);
  out.put(quantize(f.kd_field, r.kd, "kd_field"), r.kd.bits);
  out.put(quantize(f.torque_setpoint, r.torque, "torque_setpoint"), r.torque.bits);
  return out.bytes();
}

inline CommandFrame decode_command(std::span<const std::uint8_t> bytes, const CodecRanges& r = {}) {
  detail::BitReader in(detail::to_payload(bytes));
  CommandFrame f;
  f.position_setpoint = dequantize(in.get(r.position.bits), r.position);
  f.velocity_setpoint = dequantize(in.get(r.velocity.bits), r.velocity);
  f.kp_field = dequantize(in.get(r.kp.bits), r.kp);
  f.kd_field = dequantize(in.get(r.kd.bits), r.kd);
  f.torque_setpoint = dequantize(in.get(r.torque.bits), r.torque);
  return f;
}

inline Payload encode_telemetry(const TelemetryFrame& f, const CodecRanges& r = {}) {
  detail::BitPacker out;
  out.put(quantize(f.position, r.position, "position"), r.position.bits);
  out.put(quantize(f.velocity, r.velocity, "velocity"), r.velocity.bits);
  out.put(quantize(f.torque_estimate, r.torque, "torque_estimate"), r.torque.bits);
  return out.bytes();
}

inline TelemetryFrame decode_telemetry(std::span<const std::uint8_t> bytes,
                                       const CodecRanges& r = {}) {
  detail::BitReader in(detail::to_payload(bytes));
  TelemetryFrame f;
  f.position = dequantize(in.get(r.position.bits), r.position);
  f.velocity = dequantize(in.get(r.velocity.bits), r.velocity);
  f.torque_estimate = dequantize(in.get(r.torque.bits), r.torque);
  return f;
}

// Worst-case CAN 2.0 standard frame overhead including a stuffing margin.
inline constexpr int kStandardFrameOverheadBits = 64;
inline constexpr double kBusBitrate = 1e6;

// Fraction of a 1 Mbit/s bus used by one command and one telemetry frame per
// control tick.
inline double bus_budget(double control_rate, int frame_overhead_bits = kStandardFrameOverheadBits) {
  if (!(control_rate > 0)) throw std::invalid_argument("bus_budget: control_rate must be > 0");
  return control_rate * 2.0 * (64.0 + frame_overhead_bits) / kBusBitrate;
}

// ---------------------------------------------------------------------------
// Hex test vectors: one frame per line, "<16 hex digits> # comment".

struct HexVector {
  Payload payload;
  std::string comment;
};

inline std::string to_hex(const Payload& p) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (auto b : p) os << std::setw(2) << static_cast<unsigned>(b);
  return os.str();
}

inline std::string format_hex_vector(const Payload& p, std::string_view comment) {
  std::string line = to_hex(p);
  if (!comment.empty()) {
    line += " # ";
    line += comment;
  }
  return line;
}

inline Payload parse_hex(std::string_view hex) {
  if (hex.size() != 16) throw CodecError("hex payload must have 16 digits: '" + std::string(hex) + "'");
  Payload p{};
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return std::uint8_t(c - '0');
    if (c >= 'a' && c <= 'f') return std::uint8_t(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return std::uint8_t(c - 'A' + 10);
    throw CodecError("invalid hex digit in '" + std::string(hex) + "'");
  };
  for (std::size_t i = 0; i < 8; ++i) {
    p[i] = std::uint8_t((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return p;
}

// Blank lines and lines starting with '#' are skipped.
inline std::vector<HexVector> parse_hex_vectors(std::string_view text) {
  std::vector<HexVector> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;

    auto trim = [](std::string_view s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return std::string_view{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    HexVector v;
    const auto hash = line.find('#');
    v.payload = parse_hex(trim(line.substr(0, hash)));
    if (hash != std::string_view::npos) v.comment = std::string(trim(line.substr(hash + 1)));
    out.push_back(std::move(v));
    if (end == text.size()) break;
  }
  return out;
}

}  // namespace qdd::protocol
