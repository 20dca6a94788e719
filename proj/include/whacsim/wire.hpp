#pragma once

// Lockstep wire protocol: length-prefixed frames over a reliable ordered
// byte stream.
//
// Frame layout (all integers little-endian, floats IEEE-754 little-endian):
//   u32 payload_length | u8 msg_type | payload
//
// Message types and payloads:
//   HELLO (1), HELLO_ACK (2):
//     u16 protocol_version | f64 dt | u16 image_width | u16 image_height |
//     u8 channel_mask (bit0=R bit1=G bit2=B bit3=depth)
//   STATE_UPDATE (3):
//     f64 t_current | f64 t_next | Pose hmd | u8 n_controllers (0..2) |
//     Pose controllers[n] | (string key, f64 value)* until payload end
//   OBSERVATION (4):
//     u16 width | u16 height | u8 rgb[w*h*3] | f32 depth[w*h] |
//     f64 reward | u8 is_finished | f64 time_feature |
//     (string key, f64 value)* until payload end
//   RESET (5):
//     (string key, string value)* until payload end (may be empty)
//   RESET_ACK (6): OBSERVATION payload (the initial observation)
//   CLOSE (7): empty
//
// Pose: f64 position xyz | f64 orientation wxyz (unit quaternion).
// string: u16 byte length | UTF-8 bytes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "whacsim/geom.hpp"

namespace whacsim::wire {

enum class MsgType : uint8_t {
  kHello = 1,
  kHelloAck = 2,
  kStateUpdate = 3,
  kObservation = 4,
  kReset = 5,
  kResetAck = 6,
  kClose = 7,
};

constexpr size_t kHeaderSize = 5;
constexpr size_t kDefaultMaxPayload = 16 * 1024 * 1024;
constexpr uint16_t kProtocolVersion = 1;

constexpr uint8_t kChannelR = 0x01;
constexpr uint8_t kChannelG = 0x02;
constexpr uint8_t kChannelB = 0x04;
constexpr uint8_t kChannelDepth = 0x08;
constexpr uint8_t kChannelAll = 0x0F;

struct RgbdImage {
  uint16_t width = 0;
  uint16_t height = 0;
  std::vector<uint8_t> rgb;   // w*h*3, row-major
  std::vector<float> depth;   // w*h meters, +inf where no surface

  friend bool operator==(const RgbdImage&, const RgbdImage&) = default;

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool dims_ok() const {
    return rgb.size() == pixel_count() * 3 && depth.size() == pixel_count();
  }
};

struct HelloMsg {
  uint16_t version = kProtocolVersion;
  double dt = 0.05;
  uint16_t width = 120;
  uint16_t height = 80;
  uint8_t channel_mask = kChannelAll;

  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct HelloAckMsg {
  uint16_t version = kProtocolVersion;
  double dt = 0.05;
  uint16_t width = 120;
  uint16_t height = 80;
  uint8_t channel_mask = kChannelAll;

  friend bool operator==(const HelloAckMsg&, const HelloAckMsg&) = default;
};

struct StateUpdateMsg {
  double t_current = 0.0;
  double t_next = 0.0;
  Pose hmd{};
  std::vector<Pose> controllers;                          // 0..2
  std::vector<std::pair<std::string, double>> channels;   // extension values, e.g. fatigue

  friend bool operator==(const StateUpdateMsg&, const StateUpdateMsg&) = default;
};

struct ObservationMsg {
  RgbdImage image;
  double reward = 0.0;
  bool is_finished = false;
  double time_feature = 1.0;
  std::vector<std::pair<std::string, double>> log_entries;

  friend bool operator==(const ObservationMsg&, const ObservationMsg&) = default;
};

struct ResetMsg {
  std::vector<std::pair<std::string, std::string>> episode_config;

  friend bool operator==(const ResetMsg&, const ResetMsg&) = default;
};

struct ResetAckMsg {
  ObservationMsg initial;

  friend bool operator==(const ResetAckMsg&, const ResetAckMsg&) = default;
};

struct CloseMsg {
  friend bool operator==(const CloseMsg&, const CloseMsg&) = default;
};

using Message =
    std::variant<HelloMsg, HelloAckMsg, StateUpdateMsg, ObservationMsg, ResetMsg, ResetAckMsg, CloseMsg>;

MsgType message_type(const Message& msg);
const char* msg_type_name(MsgType t);

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecodeStatus {
  kOk,
  kNeedMoreBytes,
  kProtocolViolation,
  kMalformedPose,
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kOk;
  size_t needed = 0;    // minimum additional bytes when kNeedMoreBytes
  size_t consumed = 0;  // frame size when kOk
  Message msg{};
  std::string error;
};

// Serializes one message into a complete frame (header + payload).
std::vector<uint8_t> encode_frame(const Message& msg);

// Parses one frame from the front of the buffer. Never throws; arbitrary
// bytes yield a structured error.
DecodeResult decode_frame(const uint8_t* data, size_t size,
                          size_t max_payload = kDefaultMaxPayload);

}  // namespace whacsim::wire
