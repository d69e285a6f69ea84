#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dialogkit/evaluation.hpp"
#include "dialogkit/retrieval.hpp"
#include "dialogkit/synthesis.hpp"

namespace dialogkit {

// Connection settings shared by the HTTP adapters. The base URL is
// scheme://host:port; an api_key, when set, is sent as a bearer token.
struct EndpointConfig {
    std::string base_url;
    std::optional<std::string> api_key;
    double timeout_seconds = 60.0;
};

// Reads DIALOGKIT_{GENERATOR,ENCODER,JUDGE}_URL and DIALOGKIT_API_KEY.
// Returns nullopt when the URL variable for `role` is unset.
std::optional<EndpointConfig> endpoint_from_env(const std::string& role);

// Generator served over HTTP: POST /generate {"input"} -> {"output"}.
// When the remote model uses its own sentinel tokens (say "<extra_id_0>"),
// `native_sentinel_format` (a pattern with "{}" for the index) translates
// slots on the way out and back.
class HttpGenerator : public GeneratorBackend {
public:
    explicit HttpGenerator(EndpointConfig config,
                           std::optional<std::string> native_sentinel_format = {});
    ~HttpGenerator() override;

    std::string generate(const std::string& input_text) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Encoder served over HTTP: POST /embed {"texts"} -> {"embeddings"};
// POST /train_step with the loss batch -> 2xx.
class HttpEncoder : public EncoderBackend {
public:
    explicit HttpEncoder(EndpointConfig config);
    ~HttpEncoder() override;

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    void train_step(const LossBatch& batch) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Judge served over HTTP: POST /complete {"prompt"} -> {"completion"}.
class HttpJudge : public JudgeBackend {
public:
    explicit HttpJudge(EndpointConfig config);
    ~HttpJudge() override;

    std::string complete(const std::string& prompt_text) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Sentinel vocabulary translation used by HttpGenerator, exposed for tests.
// The format holds one "{}" where the slot index goes.
std::string translate_sentinels_to_native(const std::string& text,
                                          const std::string& format);
std::string translate_sentinels_from_native(const std::string& text,
                                            const std::string& format);

// Scripted outputs for offline runs. The file is either a JSON array
// (one shared queue) or an object mapping document ids to arrays
// (a queue per document).
struct GeneratorScript {
    std::vector<std::string> shared;
    std::map<std::string, std::vector<std::string>> per_document;

    // The queue that should serve `document_id`.
    std::vector<std::string> outputs_for(const std::string& document_id) const;
};

GeneratorScript load_generator_script(const std::string& path);

}  // namespace dialogkit
