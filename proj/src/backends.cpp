#include "dialogkit/backends.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace dialogkit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::optional<EndpointConfig> endpoint_from_env(const std::string& role) {
    std::string variable = "DIALOGKIT_";
    for (char c : role) variable += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    variable += "_URL";
    const char* url = std::getenv(variable.c_str());
    if (!url || !*url) return std::nullopt;

    EndpointConfig config;
    config.base_url = url;
    if (const char* key = std::getenv("DIALOGKIT_API_KEY"); key && *key) {
        config.api_key = key;
    }
    return config;
}

namespace {

httplib::Headers auth_headers(const EndpointConfig& config) {
    httplib::Headers headers;
    if (config.api_key) headers.emplace("Authorization", "Bearer " + *config.api_key);
    return headers;
}

std::unique_ptr<httplib::Client> make_client(const EndpointConfig& config) {
    auto client = std::make_unique<httplib::Client>(config.base_url);
    auto seconds = static_cast<time_t>(config.timeout_seconds);
    auto microseconds =
        static_cast<time_t>((config.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client->set_read_timeout(seconds, microseconds);
    client->set_write_timeout(seconds, microseconds);
    return client;
}

json post_json(httplib::Client& client, const EndpointConfig& config,
               const std::string& path, const json& body) {
    auto response =
        client.Post(path, auth_headers(config), body.dump(), "application/json");
    if (!response) {
        throw BackendError("no response from " + config.base_url + path + ": " +
                           httplib::to_string(response.error()));
    }
    if (response->status < 200 || response->status >= 300) {
        throw BackendError(config.base_url + path + " returned status " +
                           std::to_string(response->status));
    }
    try {
        return json::parse(response->body);
    } catch (const json::exception& e) {
        throw BackendError(config.base_url + path + " returned unparseable JSON: " +
                           e.what());
    }
}

std::string format_native(const std::string& format, std::size_t index) {
    std::size_t brace = format.find("{}");
    if (brace == std::string::npos) {
        throw ConfigError("sentinel format needs a {} placeholder: " + format);
    }
    return format.substr(0, brace) + std::to_string(index) + format.substr(brace + 2);
}

std::string translate(const std::string& text, const std::string& from_format,
                      const std::string& to_format) {
    // Slot indices in practice stay below the window size; 256 is beyond any
    // realistic document window but keeps this a simple bounded scan.
    std::string out = text;
    for (std::size_t k = 0; k < 256; ++k) {
        std::string from = format_native(from_format, k);
        std::string to = format_native(to_format, k);
        std::size_t pos = 0;
        bool found = false;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
            found = true;
        }
        if (!found && k > 0) break;  // contiguous indices: stop at first gap
    }
    return out;
}

}  // namespace

std::string translate_sentinels_to_native(const std::string& text,
                                          const std::string& format) {
    return translate(text, "<S{}>", format);
}

std::string translate_sentinels_from_native(const std::string& text,
                                            const std::string& format) {
    return translate(text, format, "<S{}>");
}

struct HttpGenerator::Impl {
    EndpointConfig config;
    std::optional<std::string> native_format;
};

HttpGenerator::HttpGenerator(EndpointConfig config,
                             std::optional<std::string> native_sentinel_format)
    : impl_(new Impl{std::move(config), std::move(native_sentinel_format)}) {}

HttpGenerator::~HttpGenerator() = default;

std::string HttpGenerator::generate(const std::string& input_text) {
    std::string payload_text = input_text;
    if (impl_->native_format) {
        payload_text = translate_sentinels_to_native(payload_text, *impl_->native_format);
    }
    ordered_json body;
    body["input"] = payload_text;
    // A fresh client per call keeps generate() usable from worker threads.
    auto client = make_client(impl_->config);
    json response = post_json(*client, impl_->config, "/generate", body);
    if (!response.contains("output") || !response.at("output").is_string()) {
        throw BackendError("generator response lacks an \"output\" string");
    }
    std::string output = response.at("output").get<std::string>();
    if (impl_->native_format) {
        output = translate_sentinels_from_native(output, *impl_->native_format);
    }
    return output;
}

struct HttpEncoder::Impl {
    EndpointConfig config;
    std::unique_ptr<httplib::Client> client;
};

HttpEncoder::HttpEncoder(EndpointConfig config)
    : impl_(new Impl{std::move(config), nullptr}) {
    impl_->client = make_client(impl_->config);
}

HttpEncoder::~HttpEncoder() = default;

std::vector<Embedding> HttpEncoder::embed(const std::vector<std::string>& texts) {
    ordered_json body;
    body["texts"] = texts;
    json response = post_json(*impl_->client, impl_->config, "/embed", body);
    if (!response.contains("embeddings") || !response.at("embeddings").is_array()) {
        throw BackendError("encoder response lacks an \"embeddings\" array");
    }
    std::vector<Embedding> embeddings;
    try {
        embeddings = response.at("embeddings").get<std::vector<Embedding>>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("encoder embeddings unreadable: ") + e.what());
    }
    if (embeddings.size() != texts.size()) {
        throw BackendError("encoder returned " + std::to_string(embeddings.size()) +
                           " embeddings for " + std::to_string(texts.size()) + " texts");
    }
    return embeddings;
}

void HttpEncoder::train_step(const LossBatch& batch) {
    ordered_json body;
    body["iteration"] = batch.iteration;
    body["queries"] = batch.query_texts;
    body["passages"] = batch.passage_texts;
    body["per_example_losses"] = batch.per_example_losses;
    body["mean_loss"] = batch.mean_loss;
    body["learning_rate"] = batch.learning_rate;
    body["apply_update"] = batch.apply_update;
    post_json(*impl_->client, impl_->config, "/train_step", body);
}

struct HttpJudge::Impl {
    EndpointConfig config;
};

HttpJudge::HttpJudge(EndpointConfig config) : impl_(new Impl{std::move(config)}) {}

HttpJudge::~HttpJudge() = default;

std::string HttpJudge::complete(const std::string& prompt_text) {
    ordered_json body;
    body["prompt"] = prompt_text;
    // A fresh client per call keeps complete() usable from worker threads.
    auto client = make_client(impl_->config);
    json response = post_json(*client, impl_->config, "/complete", body);
    if (!response.contains("completion") || !response.at("completion").is_string()) {
        throw BackendError("judge response lacks a \"completion\" string");
    }
    return response.at("completion").get<std::string>();
}

std::vector<std::string> GeneratorScript::outputs_for(
    const std::string& document_id) const {
    auto it = per_document.find(document_id);
    if (it != per_document.end()) return it->second;
    if (!per_document.empty()) {
        throw ConfigError("script has no outputs for document \"" + document_id + "\"");
    }
    return shared;
}

GeneratorScript load_generator_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad script file: ") + e.what());
    }

    GeneratorScript script;
    if (j.is_array()) {
        script.shared = j.get<std::vector<std::string>>();
    } else if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (!value.is_array()) {
                throw ParseError("script entry \"" + key + "\" is not an array");
            }
            script.per_document.emplace(key, value.get<std::vector<std::string>>());
        }
    } else {
        throw ParseError("script file must be a JSON array or object");
    }
    return script;
}

}  // namespace dialogkit
