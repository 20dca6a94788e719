#include "whacsim/wire.hpp"

#include <cmath>
#include <cstring>

namespace whacsim::wire {

namespace {

constexpr double kQuatNormTol = 1e-6;
constexpr size_t kPoseBytes = 7 * 8;

class Writer {
 public:
  explicit Writer(std::vector<uint8_t>& out) : out_(out) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    out_.push_back(static_cast<uint8_t>(v));
    out_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const uint8_t* p, size_t n) { out_.insert(out_.end(), p, p + n); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw EncodeError("string too long for wire format");
    u16(static_cast<uint16_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }
  void pose(const Pose& p) {
    f64(p.position.x);
    f64(p.position.y);
    f64(p.position.z);
    f64(p.orientation.w);
    f64(p.orientation.x);
    f64(p.orientation.y);
    f64(p.orientation.z);
  }

 private:
  std::vector<uint8_t>& out_;
};

// Bounded cursor over the payload. fail() latches the first error.
class Reader {
 public:
  Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  bool ok() const { return status_ == DecodeStatus::kOk; }
  DecodeStatus status() const { return status_; }
  const std::string& error() const { return error_; }
  size_t remaining() const { return size_ - pos_; }

  void fail(DecodeStatus s, const std::string& msg) {
    if (ok()) {
      status_ = s;
      error_ = msg;
    }
  }

  uint8_t u8() {
    if (!need(1)) return 0;
    return data_[pos_++];
  }
  uint16_t u16() {
    if (!need(2)) return 0;
    uint16_t v = static_cast<uint16_t>(data_[pos_]) | static_cast<uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    if (!need(4)) return 0;
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    if (!need(8)) return 0;
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint16_t n = u16();
    if (!need(n)) return "";
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void bytes(uint8_t* dst, size_t n) {
    if (!need(n)) return;
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }
  Pose pose() {
    Pose p;
    p.position.x = f64();
    p.position.y = f64();
    p.position.z = f64();
    p.orientation.w = f64();
    p.orientation.x = f64();
    p.orientation.y = f64();
    p.orientation.z = f64();
    if (!ok()) return p;
    if (!p.position.finite() || !p.orientation.finite()) {
      fail(DecodeStatus::kMalformedPose, "non-finite pose component");
    } else if (std::abs(p.orientation.norm() - 1.0) > kQuatNormTol) {
      fail(DecodeStatus::kMalformedPose, "orientation quaternion is not unit length");
    }
    return p;
  }
  double finite_f64(const char* what) {
    double v = f64();
    if (ok() && !std::isfinite(v)) {
      fail(DecodeStatus::kProtocolViolation, std::string("non-finite ") + what);
    }
    return v;
  }

 private:
  bool need(size_t n) {
    if (!ok()) return false;
    if (size_ - pos_ < n) {
      fail(DecodeStatus::kProtocolViolation, "payload truncated");
      return false;
    }
    return true;
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  DecodeStatus status_ = DecodeStatus::kOk;
  std::string error_;
};

void encode_hello_body(Writer& w, uint16_t version, double dt, uint16_t width, uint16_t height,
                       uint8_t mask) {
  w.u16(version);
  w.f64(dt);
  w.u16(width);
  w.u16(height);
  w.u8(mask);
}

void encode_observation_body(Writer& w, const ObservationMsg& m) {
  if (!m.image.dims_ok()) throw EncodeError("image buffers do not match declared dimensions");
  w.u16(m.image.width);
  w.u16(m.image.height);
  w.bytes(m.image.rgb.data(), m.image.rgb.size());
  for (float d : m.image.depth) w.f32(d);
  w.f64(m.reward);
  w.u8(m.is_finished ? 1 : 0);
  w.f64(m.time_feature);
  for (const auto& [k, v] : m.log_entries) {
    w.str(k);
    w.f64(v);
  }
}

ObservationMsg decode_observation_body(Reader& r) {
  ObservationMsg m;
  m.image.width = r.u16();
  m.image.height = r.u16();
  size_t n = static_cast<size_t>(m.image.width) * m.image.height;
  if (r.ok() && r.remaining() < n * 3 + n * 4) {
    r.fail(DecodeStatus::kProtocolViolation, "image buffers shorter than declared dimensions");
    return m;
  }
  if (r.ok()) {
    m.image.rgb.resize(n * 3);
    r.bytes(m.image.rgb.data(), n * 3);
    m.image.depth.resize(n);
    for (size_t i = 0; i < n && r.ok(); ++i) m.image.depth[i] = r.f32();
  }
  m.reward = r.finite_f64("reward");
  uint8_t fin = r.u8();
  if (r.ok() && fin > 1) r.fail(DecodeStatus::kProtocolViolation, "is_finished flag not 0/1");
  m.is_finished = fin != 0;
  m.time_feature = r.finite_f64("time_feature");
  while (r.ok() && r.remaining() > 0) {
    std::string key = r.str();
    double value = r.finite_f64("log entry");
    if (r.ok()) m.log_entries.emplace_back(std::move(key), value);
  }
  return m;
}

}  // namespace

MsgType message_type(const Message& msg) {
  struct Visitor {
    MsgType operator()(const HelloMsg&) const { return MsgType::kHello; }
    MsgType operator()(const HelloAckMsg&) const { return MsgType::kHelloAck; }
    MsgType operator()(const StateUpdateMsg&) const { return MsgType::kStateUpdate; }
    MsgType operator()(const ObservationMsg&) const { return MsgType::kObservation; }
    MsgType operator()(const ResetMsg&) const { return MsgType::kReset; }
    MsgType operator()(const ResetAckMsg&) const { return MsgType::kResetAck; }
    MsgType operator()(const CloseMsg&) const { return MsgType::kClose; }
  };
  return std::visit(Visitor{}, msg);
}

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::kHello: return "HELLO";
    case MsgType::kHelloAck: return "HELLO_ACK";
    case MsgType::kStateUpdate: return "STATE_UPDATE";
    case MsgType::kObservation: return "OBSERVATION";
    case MsgType::kReset: return "RESET";
    case MsgType::kResetAck: return "RESET_ACK";
    case MsgType::kClose: return "CLOSE";
  }
  return "UNKNOWN";
}

std::vector<uint8_t> encode_frame(const Message& msg) {
  std::vector<uint8_t> payload;
  Writer w(payload);
  struct Visitor {
    Writer& w;
    void operator()(const HelloMsg& m) const {
      encode_hello_body(w, m.version, m.dt, m.width, m.height, m.channel_mask);
    }
    void operator()(const HelloAckMsg& m) const {
      encode_hello_body(w, m.version, m.dt, m.width, m.height, m.channel_mask);
    }
    void operator()(const StateUpdateMsg& m) const {
      if (m.controllers.size() > 2) throw EncodeError("at most 2 controllers");
      w.f64(m.t_current);
      w.f64(m.t_next);
      w.pose(m.hmd);
      w.u8(static_cast<uint8_t>(m.controllers.size()));
      for (const Pose& p : m.controllers) w.pose(p);
      for (const auto& [k, v] : m.channels) {
        w.str(k);
        w.f64(v);
      }
    }
    void operator()(const ObservationMsg& m) const { encode_observation_body(w, m); }
    void operator()(const ResetMsg& m) const {
      for (const auto& [k, v] : m.episode_config) {
        w.str(k);
        w.str(v);
      }
    }
    void operator()(const ResetAckMsg& m) const { encode_observation_body(w, m.initial); }
    void operator()(const CloseMsg&) const {}
  };
  std::visit(Visitor{w}, msg);

  if (payload.size() > kDefaultMaxPayload) {
    throw EncodeError("payload exceeds maximum frame size");
  }
  std::vector<uint8_t> frame;
  frame.reserve(kHeaderSize + payload.size());
  Writer hw(frame);
  hw.u32(static_cast<uint32_t>(payload.size()));
  hw.u8(static_cast<uint8_t>(message_type(msg)));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

DecodeResult decode_frame(const uint8_t* data, size_t size, size_t max_payload) {
  DecodeResult res;
  if (size < kHeaderSize) {
    res.status = DecodeStatus::kNeedMoreBytes;
    res.needed = kHeaderSize - size;
    return res;
  }
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(data[i]) << (8 * i);
  uint8_t type = data[4];
  if (len > max_payload) {
    res.status = DecodeStatus::kProtocolViolation;
    res.error = "declared payload length exceeds maximum";
    return res;
  }
  if (size < kHeaderSize + len) {
    res.status = DecodeStatus::kNeedMoreBytes;
    res.needed = kHeaderSize + len - size;
    return res;
  }

  Reader r(data + kHeaderSize, len);
  Message msg;
  switch (static_cast<MsgType>(type)) {
    case MsgType::kHello:
    case MsgType::kHelloAck: {
      uint16_t version = r.u16();
      double dt = r.finite_f64("dt");
      uint16_t width = r.u16();
      uint16_t height = r.u16();
      uint8_t mask = r.u8();
      if (r.ok() && dt <= 0.0) r.fail(DecodeStatus::kProtocolViolation, "dt must be positive");
      if (r.ok() && mask > kChannelAll) {
        r.fail(DecodeStatus::kProtocolViolation, "unknown channel mask bits");
      }
      if (static_cast<MsgType>(type) == MsgType::kHello) {
        msg = HelloMsg{version, dt, width, height, mask};
      } else {
        msg = HelloAckMsg{version, dt, width, height, mask};
      }
      break;
    }
    case MsgType::kStateUpdate: {
      StateUpdateMsg m;
      m.t_current = r.finite_f64("t_current");
      m.t_next = r.finite_f64("t_next");
      m.hmd = r.pose();
      uint8_t n = r.u8();
      if (r.ok() && n > 2) {
        r.fail(DecodeStatus::kProtocolViolation, "more than 2 controllers");
      }
      for (uint8_t i = 0; i < n && r.ok(); ++i) m.controllers.push_back(r.pose());
      while (r.ok() && r.remaining() > 0) {
        std::string key = r.str();
        double value = r.finite_f64("channel value");
        if (r.ok()) m.channels.emplace_back(std::move(key), value);
      }
      msg = std::move(m);
      break;
    }
    case MsgType::kObservation:
      msg = decode_observation_body(r);
      break;
    case MsgType::kReset: {
      ResetMsg m;
      while (r.ok() && r.remaining() > 0) {
        std::string key = r.str();
        std::string value = r.str();
        if (r.ok()) m.episode_config.emplace_back(std::move(key), std::move(value));
      }
      msg = std::move(m);
      break;
    }
    case MsgType::kResetAck: {
      ResetAckMsg m;
      m.initial = decode_observation_body(r);
      msg = std::move(m);
      break;
    }
    case MsgType::kClose:
      msg = CloseMsg{};
      break;
    default:
      res.status = DecodeStatus::kProtocolViolation;
      res.error = "unknown message type " + std::to_string(type);
      return res;
  }

  if (!r.ok()) {
    res.status = r.status();
    res.error = r.error();
    return res;
  }
  if (r.remaining() != 0) {
    res.status = DecodeStatus::kProtocolViolation;
    res.error = "trailing bytes in payload";
    return res;
  }
  res.status = DecodeStatus::kOk;
  res.consumed = kHeaderSize + len;
  res.msg = std::move(msg);
  return res;
}

}  // namespace whacsim::wire
