#include "mock_server.hpp"

#include <httplib.h>

namespace racg::fx {

struct MockOpenAIServer::Impl {
    httplib::Server server;
};

MockOpenAIServer::MockOpenAIServer() : impl_(std::make_unique<Impl>())
{
    auto guard = [this](const httplib::Request& req, httplib::Response& res) {
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(nlohmann::json::parse(req.body, nullptr, false));
            auth_.push_back(req.get_header_value("Authorization"));
        }
        if (int s = status_override.load(); s != 0) {
            res.status = s;
            res.set_content("forced failure", "text/plain");
            return false;
        }
        if (fail_next.load() > 0) {
            --fail_next;
            res.status = 500;
            res.set_content("transient", "text/plain");
            return false;
        }
        return true;
    };

    impl_->server.Post("/v1/chat/completions", [this, guard](const httplib::Request& req, httplib::Response& res) {
        if (!guard(req, res)) return;
        auto body = nlohmann::json::parse(req.body);
        auto content = body.at("messages").at(0).at("content").get<std::string>();
        nlohmann::json reply = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", chat(content)}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    impl_->server.Post("/v1/embeddings", [this, guard](const httplib::Request& req, httplib::Response& res) {
        if (!guard(req, res)) return;
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        const auto& input = body.at("input");
        for (std::size_t i = 0; i < input.size(); ++i) {
            // Deterministic vector: length of the text in slot 0, index in slot 1.
            std::vector<double> v(embedding_dim, 0.0);
            v[0] = static_cast<double>(input[i].get<std::string>().size());
            if (embedding_dim > 1) v[1] = static_cast<double>(i + 1);
            data.push_back({{"index", i}, {"embedding", v}, {"object", "embedding"}});
        }
        if (shuffle_embeddings) std::reverse(data.begin(), data.end());
        res.set_content(nlohmann::json{{"data", data}, {"model", body.at("model")}}.dump(), "application/json");
    });

    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockOpenAIServer::~MockOpenAIServer()
{
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockOpenAIServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

std::vector<nlohmann::json> MockOpenAIServer::requests() const
{
    std::lock_guard lock(mutex_);
    return requests_;
}

std::vector<std::string> MockOpenAIServer::authorizations() const
{
    std::lock_guard lock(mutex_);
    return auth_;
}

}  // namespace racg::fx
