#include "voxagg/wire.hpp"

#include <algorithm>
#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace voxagg::wire {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(ErrorKind::transport, "transport: " + what + ": " + std::strerror(errno));
}

struct Header {
  std::uint8_t type;
  std::uint64_t payload_len;
};

Header parse_header(std::span<const std::uint8_t> data) {
  if (!std::equal(kMagic.begin(), kMagic.end(), data.begin())) {
    throw Error(ErrorKind::bad_magic, "bad magic");
  }
  Header h{data[4], bytes::get<std::uint64_t>(data, 5)};
  if (h.payload_len > kMaxPayload) {
    throw Error(ErrorKind::protocol, "payload length " + std::to_string(h.payload_len) + " exceeds limit");
  }
  return h;
}

}  // namespace

bytes::Buffer encode_frame(const Frame& frame) {
  bytes::Buffer out(kHeaderSize + frame.payload.size());
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  out[4] = frame.type;
  const std::uint64_t len = frame.payload.size();
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(5 + i)] = static_cast<std::uint8_t>(len >> (8 * i));
  std::copy(frame.payload.begin(), frame.payload.end(), out.begin() + kHeaderSize);
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> data) {
  if (data.size() < kMagic.size()) throw Error(ErrorKind::truncated, "truncated frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), data.begin())) throw Error(ErrorKind::bad_magic, "bad magic");
  if (data.size() < kHeaderSize) throw Error(ErrorKind::truncated, "truncated frame header");
  const Header h = parse_header(data);
  const auto available = data.size() - kHeaderSize;
  if (available < h.payload_len) throw Error(ErrorKind::truncated, "truncated frame payload");
  if (available > h.payload_len) throw Error(ErrorKind::size_mismatch, "size mismatch: trailing bytes after frame");
  return Frame(h.type, bytes::Buffer(data.begin() + kHeaderSize, data.end()));
}

FdStream::FdStream(int read_fd, int write_fd, int child_pid)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid) {}

FdStream::~FdStream() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    ::waitpid(child_pid_, &status, 0);
  }
}

bool FdStream::read_exact(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const auto n = ::read(read_fd_, out.data() + done, out.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("read");
    }
    if (n == 0) {
      if (done == 0) return false;
      throw Error(ErrorKind::truncated, "transport: connection closed mid-message");
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    auto n = ::send(write_fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(write_fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write");
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<Frame> read_frame(Stream& stream) {
  std::array<std::uint8_t, kHeaderSize> head{};
  if (!stream.read_exact(head)) return std::nullopt;
  const Header h = parse_header(head);
  Frame frame(h.type, bytes::Buffer(h.payload_len));
  if (h.payload_len > 0 && !stream.read_exact(frame.payload)) {
    throw Error(ErrorKind::truncated, "transport: connection closed before payload");
  }
  return frame;
}

void write_frame(Stream& stream, const Frame& frame) { stream.write_all(encode_frame(frame)); }

std::unique_ptr<Stream> connect(const std::string& endpoint) {
  if (endpoint.rfind("tcp:", 0) == 0) {
    const auto rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorKind::config, "endpoint must be tcp:HOST:PORT");
    const auto host = rest.substr(0, colon);
    const auto port = rest.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
      throw Error(ErrorKind::transport, "transport: cannot resolve " + host + ": " + gai_strerror(rc));
    }
    int fd = -1;
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error(ErrorKind::transport, "transport: cannot connect to " + endpoint);
    return std::make_unique<FdStream>(fd, fd);
  }
  if (endpoint.rfind("exec:", 0) == 0) {
    const auto command = endpoint.substr(5);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw_errno("pipe");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw_errno("pipe");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw_errno("fork");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<FdStream>(from_child[0], to_child[1], pid);
  }
  throw Error(ErrorKind::config, "unsupported endpoint '" + endpoint + "' (expected tcp: or exec:)");
}

std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>> socket_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw_errno("socketpair");
  return {std::make_unique<FdStream>(fds[0], fds[0]), std::make_unique<FdStream>(fds[1], fds[1])};
}

TcpListener::TcpListener(std::uint16_t port) : fd_(::socket(AF_INET, SOCK_STREAM, 0)), port_(port) {
  if (fd_ < 0) throw_errno("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 4) != 0) {
    ::close(fd_);
    throw_errno("bind/listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { ::close(fd_); }

std::unique_ptr<Stream> TcpListener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw_errno("accept");
  return std::make_unique<FdStream>(fd, fd);
}

nlohmann::json info_to_json(const ModelInfo& info) {
  return {{"num_classes", info.num_classes},
          {"dims", {info.input_dims.width, info.input_dims.height, info.input_dims.depth}},
          {"has_gradient", info.has_gradient}};
}

ModelInfo info_from_json(const nlohmann::json& j) {
  try {
    ModelInfo info;
    info.backend = Backend::remote;
    info.num_classes = j.at("num_classes").get<Index>();
    const auto& d = j.at("dims");
    info.input_dims = Dims{d.at(0).get<Index>(), d.at(1).get<Index>(), d.at(2).get<Index>()};
    info.has_gradient = j.at("has_gradient").get<bool>();
    if (info.num_classes < 2 || !info.input_dims.valid()) {
      throw Error(ErrorKind::protocol, "INFO describes an invalid model");
    }
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::protocol, std::string("malformed INFO: ") + e.what());
  }
}

bytes::Buffer encode_volume_payload(const VolumeD& x) {
  bytes::Buffer out;
  out.reserve(static_cast<std::size_t>(x.size()) * sizeof(float));
  for (Index i = 0; i < x.size(); ++i) bytes::put<float>(out, static_cast<float>(x[i]));
  return out;
}

VolumeD decode_volume_payload(std::span<const std::uint8_t> payload, Dims dims) {
  if (payload.size() != static_cast<std::size_t>(dims.size()) * sizeof(float)) {
    throw Error(ErrorKind::size_mismatch, "size mismatch: volume payload has " + std::to_string(payload.size()) +
                                              " bytes for dims " + to_string(dims));
  }
  VolumeD x(dims);
  for (Index i = 0; i < x.size(); ++i) {
    x[i] = bytes::get<float>(payload, static_cast<std::size_t>(i) * sizeof(float));
  }
  return x;
}

bytes::Buffer encode_gradient_request(Index class_id, const VolumeD& x, const ClassMask& mask) {
  bytes::Buffer out;
  bytes::put<std::uint32_t>(out, static_cast<std::uint32_t>(class_id));
  bytes::append(out, encode_volume_payload(x));
  bytes::append(out, {mask.data().data(), static_cast<std::size_t>(mask.size())});
  return out;
}

GradientRequest decode_gradient_request(std::span<const std::uint8_t> payload, Dims dims) {
  const auto p = static_cast<std::size_t>(dims.size());
  if (payload.size() != 4 + p * sizeof(float) + p) {
    throw Error(ErrorKind::size_mismatch, "size mismatch: gradient request has " +
                                              std::to_string(payload.size()) + " bytes");
  }
  GradientRequest req;
  req.class_id = bytes::get<std::uint32_t>(payload, 0);
  req.x = decode_volume_payload(payload.subspan(4, p * sizeof(float)), dims);
  const auto mask_bytes = payload.subspan(4 + p * sizeof(float));
  ClassMask::Array m(dims.size());
  std::copy(mask_bytes.begin(), mask_bytes.end(), m.data());
  req.mask = ClassMask(dims, std::move(m));
  return req;
}

ModelInfo handshake(Stream& stream) {
  write_frame(stream, Frame(MessageType::hello));
  auto reply = read_frame(stream);
  if (!reply) throw Error(ErrorKind::transport, "transport: server closed the connection during HELLO");
  if (reply->is(MessageType::error)) {
    throw Error(ErrorKind::protocol, "server error: " + std::string(reply->payload.begin(), reply->payload.end()));
  }
  if (!reply->is(MessageType::info)) throw Error(ErrorKind::protocol, "expected INFO reply to HELLO");
  try {
    return info_from_json(nlohmann::json::parse(reply->payload.begin(), reply->payload.end()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::protocol, std::string("INFO payload is not JSON: ") + e.what());
  }
}

RemoteModel::RemoteModel(std::unique_ptr<Stream> stream) : stream_(std::move(stream)) {
  info_ = handshake(*stream_);
}

Frame RemoteModel::round_trip(const Frame& request, MessageType expected) {
  write_frame(*stream_, request);
  auto reply = read_frame(*stream_);
  if (!reply) throw Error(ErrorKind::transport, "transport: server closed the connection");
  if (reply->is(MessageType::error)) {
    throw Error(ErrorKind::protocol, "server error: " + std::string(reply->payload.begin(), reply->payload.end()));
  }
  if (!reply->is(expected)) {
    throw Error(ErrorKind::protocol, "unexpected reply type " + std::to_string(reply->type));
  }
  return std::move(*reply);
}

LogitFieldD RemoteModel::forward(const VolumeD& x) {
  check_model_call(info_, x);
  const auto reply = round_trip(Frame(MessageType::forward, encode_volume_payload(x)), MessageType::logits);
  const auto p = static_cast<std::size_t>(x.size());
  const auto l = static_cast<std::size_t>(info_.num_classes);
  if (reply.payload.size() != p * l * sizeof(float)) {
    throw Error(ErrorKind::size_mismatch, "size mismatch: LOGITS payload has wrong length");
  }
  LogitFieldD out(x.dims(), info_.num_classes);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t c = 0; c < l; ++c) {
      out(static_cast<Index>(i), static_cast<Index>(c)) =
          bytes::get<float>(reply.payload, (i * l + c) * sizeof(float));
    }
  }
  return out;
}

VolumeD RemoteModel::proxy_gradient(const VolumeD& x, Index class_id, const ClassMask& mask) {
  check_model_call(info_, x, class_id, mask);
  if (!info_.has_gradient) throw Error(ErrorKind::no_gradient, "remote model does not provide gradients");
  const auto reply = round_trip(Frame(MessageType::gradient, encode_gradient_request(class_id, x, mask)),
                                MessageType::grad);
  return decode_volume_payload(reply.payload, x.dims());
}

Frame respond(SegmentationModel& model, const Frame& request) {
  auto error = [](const std::string& msg) {
    return Frame(MessageType::error, bytes::Buffer(msg.begin(), msg.end()));
  };
  const ModelInfo info = model.info();
  try {
    switch (static_cast<MessageType>(request.type)) {
      case MessageType::hello: {
        const auto text = info_to_json(info).dump();
        return Frame(MessageType::info, bytes::Buffer(text.begin(), text.end()));
      }
      case MessageType::forward: {
        const auto logits = model.forward(decode_volume_payload(request.payload, info.input_dims));
        bytes::Buffer out;
        out.reserve(static_cast<std::size_t>(logits.values().size()) * sizeof(float));
        for (Index i = 0; i < logits.num_voxels(); ++i) {
          for (Index c = 0; c < logits.num_classes(); ++c) bytes::put<float>(out, static_cast<float>(logits(i, c)));
        }
        return Frame(MessageType::logits, std::move(out));
      }
      case MessageType::gradient: {
        if (!info.has_gradient) return error("model has no gradient capability");
        const auto req = decode_gradient_request(request.payload, info.input_dims);
        return Frame(MessageType::grad, encode_volume_payload(model.proxy_gradient(req.x, req.class_id, req.mask)));
      }
      default:
        return error("unknown msg_type " + std::to_string(request.type));
    }
  } catch (const Error& e) {
    return error(e.what());
  }
}

void serve(SegmentationModel& model, Stream& stream) {
  for (;;) {
    std::optional<Frame> request;
    try {
      request = read_frame(stream);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::bad_magic) throw;
      const std::string msg = e.what();
      write_frame(stream, Frame(MessageType::error, bytes::Buffer(msg.begin(), msg.end())));
      continue;
    }
    if (!request) return;
    write_frame(stream, respond(model, *request));
  }
}

}  // namespace voxagg::wire
