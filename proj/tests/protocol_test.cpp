#include "qdd/protocol.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace qdd::protocol {
namespace {

const CodecRanges kRanges{};

std::string read_vectors() {
  std::ifstream in(std::string(QDD_TEST_DATA_DIR) + "/codec_vectors.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "command pos=1 vel=-2.5 ..." -> kind + map
std::pair<std::string, std::map<std::string, double>> parse_comment(const std::string& c) {
  std::istringstream is(c);
  std::string kind, kv;
  is >> kind;
  std::map<std::string, double> values;
  while (is >> kv) {
    const auto eq = kv.find('=');
    values[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return {kind, values};
}

TEST(Quantize, Endpoints) {
  EXPECT_EQ(quantize(-6.0, kRanges.torque, "t"), 0u);
  EXPECT_EQ(quantize(6.0, kRanges.torque, "t"), 4095u);
  EXPECT_EQ(quantize(0.0, kRanges.torque, "t"), 2047u);  // midpoint tie floors
  EXPECT_EQ(quantize(-12.5, kRanges.position, "p"), 0u);
  EXPECT_EQ(quantize(12.5, kRanges.position, "p"), 65535u);
  EXPECT_EQ(dequantize(0, kRanges.torque), -6.0);
  EXPECT_EQ(dequantize(4095, kRanges.torque), 6.0);
  EXPECT_NEAR(kRanges.torque.step(), 12.0 / 4095, 1e-18);
  EXPECT_NEAR(kRanges.torque.step(), 0.00293, 1e-5);
}

TEST(Quantize, OutOfRangeNamesField) {
  try {
    quantize(7.0, kRanges.torque, "torque_setpoint");
    FAIL() << "expected CodecError";
  } catch (const CodecError& e) {
    EXPECT_NE(std::string(e.what()).find("torque_setpoint"), std::string::npos);
  }
  EXPECT_THROW(quantize(std::nan(""), kRanges.torque, "t"), CodecError);
  CommandFrame f;
  f.kd_field = -0.1;
  try {
    encode_command(f);
    FAIL() << "expected CodecError";
  } catch (const CodecError& e) {
    EXPECT_NE(std::string(e.what()).find("kd_field"), std::string::npos);
  }
}

TEST(Quantize, Exhaustive12BitRoundTrip) {
  for (const FieldRange* r : {&kRanges.velocity, &kRanges.torque, &kRanges.kp, &kRanges.kd}) {
    for (std::uint32_t code = 0; code <= r->max_code(); ++code) {
      const double x = dequantize(code, *r);
      const std::uint32_t back = quantize(x, *r, "f");
      // Dequantized points may land a hair below their code boundary.
      ASSERT_LE(code - back, 1u);
      ASSERT_LE(std::abs(dequantize(back, *r) - x), r->step() * (1 + 1e-9));
      // Midpoints between codes round-trip within one step.
      if (code < r->max_code()) {
        const double mid = x + 0.5 * r->step();
        ASSERT_LE(std::abs(dequantize(quantize(mid, *r, "f"), *r) - mid), r->step());
      }
    }
  }
}

TEST(Quantize, Randomized16BitRoundTrip) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-12.5, 12.5);
  const FieldRange& r = kRanges.position;
  for (int i = 0; i < 200000; ++i) {
    const double x = u(rng);
    ASSERT_LE(std::abs(dequantize(quantize(x, r, "p"), r) - x), r.step());
  }
}

TEST(Quantize, Monotone) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int i = 0; i < 100000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    ASSERT_LE(quantize(a, kRanges.torque, "t"), quantize(b, kRanges.torque, "t"));
  }
}

TEST(Codec, AllMinimumAndMaximum) {
  CommandFrame lo{-6, -12.5, -65, 0, 0};
  EXPECT_EQ(to_hex(encode_command(lo)), "0000000000000000");
  CommandFrame hi{6, 12.5, 65, 500, 5};
  EXPECT_EQ(to_hex(encode_command(hi)), "ffffffffffffffff");

  const Payload zeros{};
  const TelemetryFrame t0 = decode_telemetry(zeros);
  EXPECT_EQ(t0.position, -12.5);
  EXPECT_EQ(t0.velocity, -65.0);
  EXPECT_EQ(t0.torque_estimate, -6.0);
  Payload ones;
  ones.fill(0xff);
  const TelemetryFrame t1 = decode_telemetry(ones);
  EXPECT_EQ(t1.position, 12.5);
  EXPECT_EQ(t1.velocity, 65.0);
  EXPECT_EQ(t1.torque_estimate, 6.0);
}

TEST(Codec, WrongLengthRejected) {
  const std::vector<std::uint8_t> seven(7), nine(9);
  EXPECT_THROW(decode_telemetry(seven), CodecError);
  EXPECT_THROW(decode_command(nine), CodecError);
}

TEST(Codec, RandomFrameRoundTrip) {
  std::mt19937_64 rng(18);
  auto draw = [&](const FieldRange& r) { return std::uniform_real_distribution<double>(r.min, r.max)(rng); };
  for (int i = 0; i < 100000; ++i) {
    const CommandFrame c{draw(kRanges.torque), draw(kRanges.position), draw(kRanges.velocity),
                         draw(kRanges.kp), draw(kRanges.kd)};
    const Payload p = encode_command(c);
    ASSERT_EQ(p.size(), 8u);
    const CommandFrame d = decode_command(p);
    ASSERT_LE(std::abs(d.torque_setpoint - c.torque_setpoint), kRanges.torque.step());
    ASSERT_LE(std::abs(d.position_setpoint - c.position_setpoint), kRanges.position.step());
    ASSERT_LE(std::abs(d.velocity_setpoint - c.velocity_setpoint), kRanges.velocity.step());
    ASSERT_LE(std::abs(d.kp_field - c.kp_field), kRanges.kp.step());
    ASSERT_LE(std::abs(d.kd_field - c.kd_field), kRanges.kd.step());

    const TelemetryFrame t{draw(kRanges.position), draw(kRanges.velocity), draw(kRanges.torque)};
    const Payload tp = encode_telemetry(t);
    ASSERT_EQ(tp[5] | tp[6] | tp[7], 0);
    const TelemetryFrame u = decode_telemetry(tp);
    ASSERT_LE(std::abs(u.position - t.position), kRanges.position.step());
    ASSERT_LE(std::abs(u.velocity - t.velocity), kRanges.velocity.step());
    ASSERT_LE(std::abs(u.torque_estimate - t.torque_estimate), kRanges.torque.step());
  }
}

TEST(Codec, ReferenceVectors) {
  const auto vectors = parse_hex_vectors(read_vectors());
  ASSERT_EQ(vectors.size(), 10u);
  int commands = 0, telemetry = 0;
  for (const auto& v : vectors) {
    const auto [kind, f] = parse_comment(v.comment);
    if (kind == "command") {
      const CommandFrame c{f.at("tau"), f.at("pos"), f.at("vel"), f.at("kp"), f.at("kd")};
      EXPECT_EQ(to_hex(encode_command(c)), to_hex(v.payload)) << v.comment;
      ++commands;
    } else {
      ASSERT_EQ(kind, "telemetry");
      const TelemetryFrame t{f.at("pos"), f.at("vel"), f.at("tau")};
      EXPECT_EQ(to_hex(encode_telemetry(t)), to_hex(v.payload)) << v.comment;
      ++telemetry;
    }
  }
  EXPECT_EQ(commands, 6);
  EXPECT_EQ(telemetry, 4);
}

TEST(HexFormat, RoundTripAndErrors) {
  const Payload p{0x8a, 0x3c, 0x7b, 0x00, 0x51, 0x19, 0x99, 0xbb};
  const std::string line = format_hex_vector(p, "sample");
  EXPECT_EQ(line, "8a3c7b00511999bb # sample");
  const auto parsed = parse_hex_vectors("# header\n\n  " + line + "\r\n8A3C7B00511999BB\n");
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0].payload, p);
  EXPECT_EQ(parsed[0].comment, "sample");
  EXPECT_EQ(parsed[1].payload, p);
  EXPECT_TRUE(parsed[1].comment.empty());
  EXPECT_THROW(parse_hex("8a3c"), CodecError);
  EXPECT_THROW(parse_hex("8a3c7b00511999bg"), CodecError);
}

TEST(BusBudget, Utilisation) {
  EXPECT_NEAR(bus_budget(100), 0.0256, 1e-15);
  EXPECT_NEAR(bus_budget(100, 0), 0.0128, 1e-15);
  EXPECT_NEAR(bus_budget(1000), 0.256, 1e-15);
  EXPECT_LT(bus_budget(1000), 1.0);
  EXPECT_THROW(bus_budget(0), std::invalid_argument);
}

TEST(Codec, RangesCoverPlantExtremes) {
  EXPECT_LE(kRanges.torque.min, -3.0);
  EXPECT_GE(kRanges.torque.max, 3.0);
  EXPECT_GE(kRanges.position.max, 1.1);
  EXPECT_LE(kRanges.position.min, -1.1);
}

}  // namespace
}  // namespace qdd::protocol
