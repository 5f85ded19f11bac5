#ifndef DRS_WIRE_HPP
#define DRS_WIRE_HPP

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drs/classifier.hpp"

namespace drs {

// JSON-lines protocol between this process and an external model server.
//
//   server -> client, once: {"type":"hello","classes":C,"channels":1|3,"names":[...]}
//   client -> server:       {"type":"classify","id":n,"width":W,"height":H,"channels":K,
//                            "pixels":"<base64 of row-major 8-bit samples, channel-interleaved>"}
//   server -> client:       {"type":"scores","id":n,"scores":[...]}
//                        or {"type":"error","id":n,"message":"..."}
//
// Pixels are quantized as round(v * 255) clamped to [0,255]. Replies may
// arrive in any order; they are matched by id.
namespace wire {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Gray image replicated to `channels` interleaved 8-bit samples.
std::vector<std::uint8_t> quantize_pixels(const GrayImage& image, int channels);

std::string classify_request(std::int64_t id, const GrayImage& image, int channels);
std::string hello_message(const ClassifierInfo& info);
std::string scores_message(std::int64_t id, const std::vector<double>& scores);
std::string error_message(std::int64_t id, std::string_view message);

struct Hello {
  ClassifierInfo info;
};
struct Scores {
  std::int64_t id = 0;
  std::vector<double> scores;
};
struct Failure {
  std::int64_t id = 0;
  std::string message;
};
struct ClassifyRequest {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
};
using Message = std::variant<Hello, Scores, Failure, ClassifyRequest>;

// Throws DataError on malformed lines.
Message parse(std::string_view line);

}  // namespace wire

// Runs `command` under /bin/sh with stdin/stdout wired to the protocol above.
// Calls are serialized internally; each batch is pipelined, i.e. all requests
// are written before replies are collected.
class SubprocessClassifier final : public Classifier {
 public:
  explicit SubprocessClassifier(const std::string& command,
                                std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~SubprocessClassifier() override;

  SubprocessClassifier(const SubprocessClassifier&) = delete;
  SubprocessClassifier& operator=(const SubprocessClassifier&) = delete;

  const ClassifierInfo& handshake() const override { return info_; }
  ClassScores classify(const GrayImage& image) override;
  std::vector<ClassScores> classify_batch(std::span<const GrayImage> images) override;

 private:
  std::string read_line(std::chrono::steady_clock::time_point deadline, std::int64_t waiting_for);
  std::vector<ClassScores> exchange(std::span<const GrayImage> images);
  void shutdown();

  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 0;
  std::chrono::milliseconds timeout_;
  ClassifierInfo info_;
};

}  // namespace drs

#endif  // DRS_WIRE_HPP
