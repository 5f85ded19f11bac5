#include "drs/wire.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <map>
#include <thread>

#include <json.hpp>

#include "drs/image_io.hpp"

namespace drs {
namespace wire {
namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw DataError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw DataError("base64 padding in the middle of a quantum");
        q[k] = decode_char(c);
        if (q[k] < 0) throw DataError("invalid base64 character");
      }
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> quantize_pixels(const GrayImage& image, int channels) {
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(image.size()) * channels);
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const std::uint8_t q = quantize8(image.data()[i]);
    for (int k = 0; k < channels; ++k) out[i * channels + k] = q;
  }
  return out;
}

std::string classify_request(std::int64_t id, const GrayImage& image, int channels) {
  const nlohmann::json j = {{"type", "classify"},
                            {"id", id},
                            {"width", image.width()},
                            {"height", image.height()},
                            {"channels", channels},
                            {"pixels", base64_encode(quantize_pixels(image, channels))}};
  return j.dump();
}

std::string hello_message(const ClassifierInfo& info) {
  nlohmann::json j = {{"type", "hello"}, {"classes", info.class_count}, {"channels", info.input_channels}};
  j["names"] = info.class_names;
  return j.dump();
}

std::string scores_message(std::int64_t id, const std::vector<double>& scores) {
  return nlohmann::json{{"type", "scores"}, {"id", id}, {"scores", scores}}.dump();
}

std::string error_message(std::int64_t id, std::string_view message) {
  return nlohmann::json{{"type", "error"}, {"id", id}, {"message", std::string(message)}}.dump();
}

Message parse(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "hello") {
      Hello h;
      h.info.class_count = j.at("classes").get<int>();
      h.info.input_channels = j.value("channels", 1);
      if (j.contains("names")) h.info.class_names = j.at("names").get<std::vector<std::string>>();
      if (h.info.class_count < 2) throw DataError("hello declares fewer than 2 classes");
      if (h.info.input_channels != 1 && h.info.input_channels != 3) throw DataError("hello channels must be 1 or 3");
      return h;
    }
    if (type == "scores") {
      return Scores{j.at("id").get<std::int64_t>(), j.at("scores").get<std::vector<double>>()};
    }
    if (type == "error") {
      return Failure{j.at("id").get<std::int64_t>(), j.value("message", std::string("unspecified error"))};
    }
    if (type == "classify") {
      ClassifyRequest r;
      r.id = j.at("id").get<std::int64_t>();
      r.width = j.at("width").get<int>();
      r.height = j.at("height").get<int>();
      r.channels = j.at("channels").get<int>();
      r.pixels = base64_decode(j.at("pixels").get<std::string>());
      if (r.width <= 0 || r.height <= 0 ||
          r.pixels.size() != static_cast<std::size_t>(r.width) * r.height * r.channels) {
        throw DataError("classify request pixel payload does not match its dimensions");
      }
      return r;
    }
    throw DataError("unknown message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed protocol line: ") + e.what());
  }
}

}  // namespace wire

namespace {

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

int millis_until(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

}  // namespace

SubprocessClassifier::SubprocessClassifier(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw ClassifierUnavailable("cannot create pipes");
  pid_ = ::fork();
  if (pid_ < 0) throw ClassifierUnavailable("cannot fork classifier process");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  set_nonblocking(to_child_);
  set_nonblocking(from_child_);

  try {
    const std::string line = read_line(std::chrono::steady_clock::now() + timeout_, -1);
    const wire::Message msg = wire::parse(line);
    const auto* hello = std::get_if<wire::Hello>(&msg);
    if (hello == nullptr) throw ClassifierUnavailable("protocol violation: first message is not hello");
    info_ = hello->info;
  } catch (const DataError& e) {
    shutdown();
    throw ClassifierUnavailable(std::string("handshake failed: ") + e.what());
  } catch (...) {
    shutdown();
    throw;
  }
}

SubprocessClassifier::~SubprocessClassifier() { shutdown(); }

void SubprocessClassifier::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string SubprocessClassifier::read_line(std::chrono::steady_clock::time_point deadline, std::int64_t waiting_for) {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, millis_until(deadline));
    if (ready == 0) throw ClassifierUnavailable("classifier timed out", waiting_for);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ClassifierUnavailable("poll failed", waiting_for);
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n == 0) throw ClassifierUnavailable("classifier process closed its output", waiting_for);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw ClassifierUnavailable("read from classifier failed", waiting_for);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ClassScores SubprocessClassifier::classify(const GrayImage& image) {
  return classify_batch(std::span<const GrayImage>(&image, 1)).front();
}

std::vector<ClassScores> SubprocessClassifier::classify_batch(std::span<const GrayImage> images) {
  std::lock_guard lock(mutex_);
  if (to_child_ < 0) throw ClassifierUnavailable("classifier process is not running");
  try {
    return exchange(images);
  } catch (const ClassifierUnavailable&) {
    // The stream may hold half-written requests or stale replies.
    shutdown();
    throw;
  }
}

std::vector<ClassScores> SubprocessClassifier::exchange(std::span<const GrayImage> images) {
  const std::int64_t first_id = next_id_;
  next_id_ += static_cast<std::int64_t>(images.size());
  std::string outgoing;
  for (std::size_t i = 0; i < images.size(); ++i) {
    outgoing += wire::classify_request(first_id + static_cast<std::int64_t>(i), images[i], info_.input_channels);
    outgoing += '\n';
  }

  std::vector<ClassScores> results(images.size());
  std::vector<bool> have(images.size(), false);
  std::size_t received = 0;
  std::size_t written = 0;
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  auto oldest_pending = [&]() -> std::int64_t {
    for (std::size_t i = 0; i < have.size(); ++i) {
      if (!have[i]) return first_id + static_cast<std::int64_t>(i);
    }
    return -1;
  };

  while (received < images.size()) {
    // Drain complete lines first.
    for (auto nl = buffer_.find('\n'); nl != std::string::npos; nl = buffer_.find('\n')) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      wire::Message msg;
      try {
        msg = wire::parse(line);
      } catch (const DataError& e) {
        throw ClassifierUnavailable(std::string("protocol violation: ") + e.what(), oldest_pending());
      }
      if (const auto* failure = std::get_if<wire::Failure>(&msg)) {
        throw ClassifierUnavailable("classifier error: " + failure->message, failure->id);
      }
      const auto* scores = std::get_if<wire::Scores>(&msg);
      if (scores == nullptr) throw ClassifierUnavailable("protocol violation: unexpected message", oldest_pending());
      const std::int64_t slot = scores->id - first_id;
      if (slot < 0 || slot >= static_cast<std::int64_t>(images.size()) || have[slot]) {
        throw ClassifierUnavailable("protocol violation: unexpected reply id", scores->id);
      }
      results[slot].scores = scores->scores;
      have[slot] = true;
      ++received;
      deadline = std::chrono::steady_clock::now() + timeout_;
    }
    if (received == images.size()) break;

    std::array<pollfd, 2> fds{pollfd{from_child_, POLLIN, 0}, pollfd{to_child_, POLLOUT, 0}};
    const nfds_t nfds = written < outgoing.size() ? 2 : 1;
    const int ready = ::poll(fds.data(), nfds, millis_until(deadline));
    if (ready == 0) throw ClassifierUnavailable("classifier timed out", oldest_pending());
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ClassifierUnavailable("poll failed", oldest_pending());
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(to_child_, outgoing.data() + written, outgoing.size() - written);
      if (n < 0 && errno != EAGAIN && errno != EINTR) {
        throw ClassifierUnavailable("classifier process stopped reading", oldest_pending());
      }
      if (n > 0) written += static_cast<std::size_t>(n);
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char chunk[65536];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n == 0) throw ClassifierUnavailable("classifier process exited", oldest_pending());
      if (n < 0 && errno != EAGAIN && errno != EINTR) {
        throw ClassifierUnavailable("read from classifier failed", oldest_pending());
      }
      if (n > 0) buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
  return results;
}

}  // namespace drs
