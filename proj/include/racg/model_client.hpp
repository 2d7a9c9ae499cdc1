#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "racg/remote.hpp"

namespace racg {

/// Decoding settings handed to the code-generation model.
struct GenerationParams {
    double temperature = 0.0;
    double top_p = 0.95;
    int max_new_tokens = 4096;
    int context_window = 8192;
};

struct PromptExample {
    std::string code;
    std::string doc_id;
};

/// A rendered model input. Generation prompts carry their retrieved examples
/// so the offline copycat model can act on them; utility prompts (query
/// generation, judging) have none.
struct Prompt {
    std::string query;
    std::vector<PromptExample> examples;
    int shots = 0;
    std::string rendered;
};

/// Wraps free-form text (no examples) as a Prompt.
Prompt text_prompt(std::string text);

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual std::string name() const = 0;
    /// Raw model output. Throws RemoteError when a remote call fails for good.
    virtual std::string complete(const Prompt& prompt, const GenerationParams& params) const = 0;
};

using ModelClientPtr = std::shared_ptr<const ModelClient>;

/// Returns the first example's code verbatim, or the query with no examples.
class CopycatClient final : public ModelClient {
public:
    std::string name() const override { return "mock_copycat"; }
    std::string complete(const Prompt& prompt, const GenerationParams&) const override;
};

class ConstantClient final : public ModelClient {
public:
    explicit ConstantClient(std::string text) : text_(std::move(text)) {}
    std::string name() const override { return "mock_constant"; }
    std::string complete(const Prompt&, const GenerationParams&) const override { return text_; }

private:
    std::string text_;
};

/// Delegates to a callable; handy for scripted test doubles and bindings.
class CallbackClient final : public ModelClient {
public:
    using Fn = std::function<std::string(const Prompt&)>;
    CallbackClient(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string name() const override { return name_; }
    std::string complete(const Prompt& prompt, const GenerationParams&) const override { return fn_(prompt); }

private:
    std::string name_;
    Fn fn_;
};

/// OpenAI-compatible POST {base_url}/chat/completions with one user message.
class RemoteChatClient final : public ModelClient {
public:
    explicit RemoteChatClient(RemoteEndpoint endpoint);
    std::string name() const override { return endpoint_.model; }
    std::string complete(const Prompt& prompt, const GenerationParams& params) const override;

private:
    RemoteEndpoint endpoint_;
    std::shared_ptr<JsonTransport> transport_;
};

/// Removes a surrounding markdown fence: when the output starts with ```,
/// the opening fence line and the last fence line are dropped.
std::string strip_code_fences(const std::string& output);

}  // namespace racg
