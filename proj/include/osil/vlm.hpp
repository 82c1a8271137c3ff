#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "osil/trajectory.hpp"

namespace osil::vlm {

/// One completion request. Frames are referenced by demo step index; the
/// transport decides how to materialize them (the HTTP client encodes the
/// binary frame containers as base64, the mock inspects them in-process).
struct VlmRequest {
  std::string prompt;
  std::vector<int> frame_steps;
  double fps = 1.0;
  std::string extra;  // side channel, e.g. the visual target description
};

nlohmann::json request_to_json(const VlmRequest& request);

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string complete(const VlmRequest& request) = 0;
};

/// POSTs {model, prompt, frames (base64 .osrf), fps, max_tokens} to
/// <endpoint>/complete and returns the "text" field of the JSON response.
class HttpVlmClient : public VlmClient {
 public:
  HttpVlmClient(std::string endpoint, const Demonstration& demo,
                std::string model = "annotator", int max_tokens = 4096);
  std::string complete(const VlmRequest& request) override;

 private:
  std::string endpoint_;
  const Demonstration& demo_;
  std::string model_;
  int max_tokens_;
};

/// Wraps another client and appends (request, response) pairs to a JSON
/// transcript file after every call.
class TranscriptRecordClient : public VlmClient {
 public:
  TranscriptRecordClient(VlmClient& inner, std::string path);
  std::string complete(const VlmRequest& request) override;

 private:
  VlmClient& inner_;
  std::string path_;
  nlohmann::json entries_ = nlohmann::json::array();
};

/// Replays a recorded transcript; requests are matched by exact equality of
/// their JSON form. Unknown requests throw.
class TranscriptReplayClient : public VlmClient {
 public:
  explicit TranscriptReplayClient(const std::string& path);
  std::string complete(const VlmRequest& request) override;

 private:
  nlohmann::json entries_;
};

std::string base64_encode(const void* data, std::size_t n);

}  // namespace osil::vlm
