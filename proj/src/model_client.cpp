#include "racg/model_client.hpp"

#include "racg/error.hpp"
#include "racg/text.hpp"

namespace racg {

Prompt text_prompt(std::string text)
{
    Prompt p;
    p.query = text;
    p.rendered = std::move(text);
    return p;
}

std::string CopycatClient::complete(const Prompt& prompt, const GenerationParams&) const
{
    if (prompt.examples.empty()) return prompt.query;
    return prompt.examples.front().code;
}

RemoteChatClient::RemoteChatClient(RemoteEndpoint endpoint)
    : endpoint_(std::move(endpoint)), transport_(std::make_shared<JsonTransport>(endpoint_))
{
}

std::string RemoteChatClient::complete(const Prompt& prompt, const GenerationParams& params) const
{
    nlohmann::json body = {
        {"model", endpoint_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.rendered}}})},
        {"temperature", params.temperature},
        {"top_p", params.top_p},
        {"max_tokens", params.max_new_tokens},
    };
    auto response = transport_->post("/chat/completions", body);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw RemoteError("malformed chat completion response: " + std::string(e.what()));
    }
}

std::string strip_code_fences(const std::string& output)
{
    std::string_view view = output;
    auto lead = view.find_first_not_of(" \t\r\n");
    if (lead == std::string_view::npos || view.compare(lead, 3, "```") != 0) return output;

    auto lines = split_lines(view.substr(lead));
    std::size_t last = lines.size();
    for (std::size_t i = lines.size(); i-- > 1;) {
        if (trim(lines[i]).starts_with("```")) {
            last = i;
            break;
        }
    }
    std::string body;
    for (std::size_t i = 1; i < last; ++i) {
        if (i > 1) body += '\n';
        body += lines[i];
    }
    return body;
}

}  // namespace racg
