#include "osil/vlm.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

#include "osil/error.hpp"
#include "osil/frame_io.hpp"

namespace osil::vlm {

nlohmann::json request_to_json(const VlmRequest& request) {
  return {{"prompt", request.prompt},
          {"frames", request.frame_steps},
          {"fps", request.fps},
          {"extra", request.extra}};
}

std::string base64_encode(const void* data, std::size_t n) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    unsigned int v = p[i] << 16;
    if (i + 1 < n) v |= p[i + 1] << 8;
    if (i + 2 < n) v |= p[i + 2];
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? alphabet[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? alphabet[v & 63] : '=');
  }
  return out;
}

HttpVlmClient::HttpVlmClient(std::string endpoint, const Demonstration& demo,
                             std::string model, int max_tokens)
    : endpoint_(std::move(endpoint)),
      demo_(demo),
      model_(std::move(model)),
      max_tokens_(max_tokens) {}

std::string HttpVlmClient::complete(const VlmRequest& request) {
  nlohmann::json frames = nlohmann::json::array();
  for (int step : request.frame_steps) {
    const RgbdFrame frame =
        demo_.frames->frame(demo_.steps.at(step).frame);
    std::ostringstream os(std::ios::binary);
    write_frame(os, frame);
    const std::string bytes = os.str();
    frames.push_back(base64_encode(bytes.data(), bytes.size()));
  }
  const nlohmann::json body = {{"model", model_},
                               {"prompt", request.prompt},
                               {"frames", frames},
                               {"fps", request.fps},
                               {"max_tokens", max_tokens_}};

  httplib::Client client(endpoint_);
  client.set_read_timeout(120, 0);
  auto res = client.Post("/complete", body.dump(), "application/json");
  if (!res)
    throw Error(ErrorCode::IoError,
                "vlm: no response from endpoint " + endpoint_);
  if (res->status != 200)
    throw Error(ErrorCode::IoError,
                "vlm: endpoint returned status " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("vlm: malformed response: ") + e.what());
  }
}

TranscriptRecordClient::TranscriptRecordClient(VlmClient& inner,
                                               std::string path)
    : inner_(inner), path_(std::move(path)) {}

std::string TranscriptRecordClient::complete(const VlmRequest& request) {
  const std::string response = inner_.complete(request);
  entries_.push_back(
      {{"request", request_to_json(request)}, {"response", response}});
  std::ofstream os(path_);
  if (!os) throw Error(ErrorCode::IoError, "transcript: cannot write " + path_);
  os << entries_.dump(2) << "\n";
  return response;
}

TranscriptReplayClient::TranscriptReplayClient(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "transcript: cannot open " + path);
  try {
    is >> entries_;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("transcript: ") + e.what());
  }
}

std::string TranscriptReplayClient::complete(const VlmRequest& request) {
  const nlohmann::json key = request_to_json(request);
  for (const auto& entry : entries_)
    if (entry.at("request") == key)
      return entry.at("response").get<std::string>();
  throw Error(ErrorCode::InvalidArgument,
              "transcript: no recorded response for this request");
}

}  // namespace osil::vlm
