// Scriptable model server speaking the JSON-lines classifier protocol, used
// to exercise the subprocess client's failure handling.
//
//   fake_classifier_server MODE [N]
//     mean        scores {1-m, m}, m = mean pixel value / 255
//     rgb         like mean but announces 3 channels
//     reverse     answers each pipelined burst of requests in reverse order
//     error N     error reply for the request with sequence number >= N
//     die N       exits after answering N requests
//     hang        reads requests but never answers
//     garbage     answers with a non-JSON line
//     badhello    starts with a scores line instead of hello
//     wrongid     answers with an id nobody asked for
//     range       scores {-0.5, 1.5}

#include <poll.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "drs/wire.hpp"

using namespace drs;

namespace {

std::string pending;

// One line from stdin, or nothing at EOF. With wait_ms >= 0, gives up when no
// input arrives within that time.
std::optional<std::string> next_line(int wait_ms = -1) {
  for (;;) {
    const auto nl = pending.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending.substr(0, nl);
      pending.erase(0, nl + 1);
      return line;
    }
    if (wait_ms >= 0) {
      pollfd p{0, POLLIN, 0};
      if (::poll(&p, 1, wait_ms) <= 0) return std::nullopt;
    }
    char buf[65536];
    const ssize_t n = ::read(0, buf, sizeof buf);
    if (n <= 0) return std::nullopt;
    pending.append(buf, static_cast<std::size_t>(n));
  }
}

void emit(const std::string& line) {
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

std::vector<double> mean_scores(const wire::ClassifyRequest& r) {
  double sum = 0.0;
  for (std::uint8_t v : r.pixels) sum += v;
  const double m = sum / static_cast<double>(r.pixels.size()) / 255.0;
  return {1.0 - m, m};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "mean";
  const long n = argc > 2 ? std::strtol(argv[2], nullptr, 10) : 0;

  ClassifierInfo info;
  info.class_count = 2;
  info.class_names = {"benign", "malignant"};
  info.input_channels = mode == "rgb" ? 3 : 1;
  if (mode == "badhello") {
    emit(wire::scores_message(0, {0.5, 0.5}));
  } else {
    emit(wire::hello_message(info));
  }

  long answered = 0;
  while (auto line = next_line()) {
    const wire::Message msg = wire::parse(*line);
    const auto* req = std::get_if<wire::ClassifyRequest>(&msg);
    if (req == nullptr) return 4;
    if (mode == "hang") continue;
    if (mode == "garbage") {
      emit("this is not json");
      continue;
    }
    if (mode == "wrongid") {
      emit(wire::scores_message(req->id + 1000, {0.5, 0.5}));
      continue;
    }
    if (mode == "range") {
      emit(wire::scores_message(req->id, {-0.5, 1.5}));
      continue;
    }
    if (mode == "error" && answered >= n) {
      emit(wire::error_message(req->id, "model refused the input"));
      ++answered;
      continue;
    }
    if (mode == "die" && answered >= n) return 9;
    if (mode == "rgb" && req->channels != 3) return 5;
    if (mode == "reverse") {
      std::vector<wire::ClassifyRequest> burst{*req};
      while (auto more = next_line(100)) burst.push_back(std::get<wire::ClassifyRequest>(wire::parse(*more)));
      for (auto it = burst.rbegin(); it != burst.rend(); ++it) emit(wire::scores_message(it->id, mean_scores(*it)));
      answered += static_cast<long>(burst.size());
      continue;
    }
    emit(wire::scores_message(req->id, mean_scores(*req)));
    ++answered;
  }
  return 0;
}
