#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "voxagg/bytes.hpp"
#include "voxagg/model.hpp"

// Length-prefixed binary protocol between the toolkit and an external model
// server. Every frame is
//
//   "A2XP" | u8 msg_type | u64 payload_len (LE) | payload
//
// HELLO(1) -> INFO(2) JSON {"num_classes", "dims", "has_gradient"}
// FORWARD(3, p f32) -> LOGITS(4, p*l f32, voxel-major)
// GRADIENT(5, u32 class | p f32 | p u8 mask) -> GRAD(6, p f32)
// ERROR(255, UTF-8 text); unknown message types are answered with ERROR.
namespace voxagg::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic{'A', '2', 'X', 'P'};
inline constexpr std::size_t kHeaderSize = 13;
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 34;

enum class MessageType : std::uint8_t {
  hello = 1,
  info = 2,
  forward = 3,
  logits = 4,
  gradient = 5,
  grad = 6,
  error = 255,
};

struct Frame {
  std::uint8_t type = 0;
  bytes::Buffer payload;

  Frame() = default;
  Frame(MessageType t, bytes::Buffer p = {}) : type(static_cast<std::uint8_t>(t)), payload(std::move(p)) {}
  Frame(std::uint8_t t, bytes::Buffer p) : type(t), payload(std::move(p)) {}

  bool is(MessageType t) const { return type == static_cast<std::uint8_t>(t); }
  friend bool operator==(const Frame&, const Frame&) = default;
};

bytes::Buffer encode_frame(const Frame& frame);

/// Decodes exactly one frame occupying all of `data`. Throws bad_magic,
/// truncated (fewer bytes than the header promises) or size_mismatch
/// (trailing bytes).
Frame decode_frame(std::span<const std::uint8_t> data);

/// Bidirectional byte stream.
class Stream {
 public:
  virtual ~Stream() = default;
  /// Returns false on clean EOF before the first byte; throws on EOF mid-read.
  virtual bool read_exact(std::span<std::uint8_t> out) = 0;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
};

/// Stream over a pair of POSIX descriptors (a socket uses the same fd twice).
class FdStream final : public Stream {
 public:
  FdStream(int read_fd, int write_fd, int child_pid = -1);
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  bool read_exact(std::span<std::uint8_t> out) override;
  void write_all(std::span<const std::uint8_t> data) override;

 private:
  int read_fd_;
  int write_fd_;
  int child_pid_;
};

/// Returns std::nullopt on clean EOF at a frame boundary.
std::optional<Frame> read_frame(Stream& stream);
void write_frame(Stream& stream, const Frame& frame);

/// Opens "tcp:HOST:PORT" or "exec:SHELL COMMAND" (child speaks on stdio).
std::unique_ptr<Stream> connect(const std::string& endpoint);

/// Connected local socket pair, used to run a responder in-process.
std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>> socket_pair();

/// Bound TCP listener on 127.0.0.1; `port` 0 picks a free port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<Stream> accept();

 private:
  int fd_;
  std::uint16_t port_;
};

// Payload codecs.
nlohmann::json info_to_json(const ModelInfo& info);
ModelInfo info_from_json(const nlohmann::json& j);
bytes::Buffer encode_volume_payload(const VolumeD& x);
VolumeD decode_volume_payload(std::span<const std::uint8_t> payload, Dims dims);
bytes::Buffer encode_gradient_request(Index class_id, const VolumeD& x, const ClassMask& mask);

struct GradientRequest {
  Index class_id = 0;
  VolumeD x;
  ClassMask mask;
};
GradientRequest decode_gradient_request(std::span<const std::uint8_t> payload, Dims dims);

/// Client side of the protocol. One request in flight at a time.
class RemoteModel final : public SegmentationModel {
 public:
  explicit RemoteModel(std::unique_ptr<Stream> stream);

  ModelInfo info() const override { return info_; }
  LogitFieldD forward(const VolumeD& x) override;
  VolumeD proxy_gradient(const VolumeD& x, Index class_id, const ClassMask& mask) override;

 private:
  Frame round_trip(const Frame& request, MessageType expected);

  std::unique_ptr<Stream> stream_;
  ModelInfo info_;
};

/// Sends HELLO and returns the server's INFO.
ModelInfo handshake(Stream& stream);

/// Answers requests on `stream` with `model` until the peer closes it.
/// Malformed requests get an ERROR reply and the connection stays open.
void serve(SegmentationModel& model, Stream& stream);

/// Answers a single request frame.
Frame respond(SegmentationModel& model, const Frame& request);

}  // namespace voxagg::wire
