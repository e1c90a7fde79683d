#include "enclip/service.hpp"

#include "httplib.h"

namespace enclip::service {

EncoderClient::EncoderClient(std::string url) : url_(std::move(url)) {
  const auto scheme = url_.find("://");
  if (scheme == std::string::npos || url_.compare(0, scheme, "http") != 0) {
    throw RequestError("encoder URL must start with http://: " + url_);
  }
  const auto slash = url_.find('/', scheme + 3);
  origin_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

std::vector<float> EncoderClient::encode(const std::string& model_id, const std::string& text) const {
  httplib::Client client(origin_);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  const nlohmann::json body{{"model_id", model_id}, {"modality", "text"}, {"payload", text}};
  const auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw UpstreamError("encoder at " + url_ + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw UpstreamError("encoder at " + url_ + " returned HTTP " + std::to_string(res->status) + " for model " +
                        model_id + ": " + res->body.substr(0, 200));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("vec").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    throw UpstreamError("encoder at " + url_ + " sent a malformed reply for model " + model_id + ": " + e.what());
  }
}

}  // namespace enclip::service
