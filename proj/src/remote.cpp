#include "racg/remote.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "racg/error.hpp"
#include "racg/log.hpp"

namespace racg {

struct JsonTransport::Impl {
    explicit Impl(std::size_t slots) : in_flight(static_cast<std::ptrdiff_t>(slots)) {}
    std::string scheme_host_port;
    std::string path_prefix;
    mutable std::counting_semaphore<1024> in_flight;
};

namespace {

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& sem_;
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

JsonTransport::JsonTransport(RemoteEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      impl_(std::make_unique<Impl>(std::clamp<std::size_t>(endpoint_.max_in_flight, 1, 1024)))
{
    const auto& url = endpoint_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("remote base_url must include a scheme: '" + url + "'");
    auto path_start = url.find('/', scheme_end + 3);
    impl_->scheme_host_port = url.substr(0, path_start);
    impl_->path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/') impl_->path_prefix.pop_back();
    if (endpoint_.max_attempts < 1) endpoint_.max_attempts = 1;
}

JsonTransport::~JsonTransport() = default;

nlohmann::json JsonTransport::post(const std::string& path, const nlohmann::json& body) const
{
    SlotGuard slot(impl_->in_flight);

    httplib::Headers headers;
    if (!endpoint_.api_key_env.empty()) {
        if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string full_path = impl_->path_prefix + path;
    const std::string payload = body.dump();

    std::string last_error;
    auto backoff = endpoint_.initial_backoff;
    for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
        httplib::Client client(impl_->scheme_host_port);
        client.set_connection_timeout(endpoint_.timeout);
        client.set_read_timeout(endpoint_.timeout);
        client.set_write_timeout(endpoint_.timeout);

        auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw RemoteError("invalid JSON from " + full_path + ": " + e.what());
            }
        } else {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (!retryable_status(res->status))
                throw RemoteError(endpoint_.base_url + path + " failed with " + last_error);
        }
        if (attempt < endpoint_.max_attempts) {
            log::warn(endpoint_.base_url + path + " attempt " + std::to_string(attempt) + " failed (" +
                      last_error + "), retrying");
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw RemoteError(endpoint_.base_url + path + " failed after " + std::to_string(endpoint_.max_attempts) +
                      " attempts: " + last_error);
}

}  // namespace racg
