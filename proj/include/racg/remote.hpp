#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

namespace racg {

/// Connection settings for an OpenAI-compatible service.
struct RemoteEndpoint {
    std::string base_url;           // e.g. http://localhost:8000/v1
    std::string model;
    std::string api_key_env;        // name of the variable holding the bearer token; may be empty
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};
    std::size_t max_in_flight = 4;
};

/// JSON-over-HTTP POST with bounded concurrency and exponential-backoff
/// retries. Transport errors, 429 and 5xx are retried; other statuses fail
/// immediately.
class JsonTransport {
public:
    explicit JsonTransport(RemoteEndpoint endpoint);
    ~JsonTransport();

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

private:
    struct Impl;
    RemoteEndpoint endpoint_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace racg
