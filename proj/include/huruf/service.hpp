#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "huruf/model_store.hpp"

namespace huruf {

struct ServiceOptions {
    std::string cors_origin = "*";  // empty disables cross-origin headers
    std::size_t max_body_bytes = 1 << 20;
    std::size_t default_topk = 3;
    std::optional<std::filesystem::path> static_dir;  // served under /app
};

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

/// Request handlers over an immutable set of loaded models. Every handler is a
/// pure function of (models, request body).
class InferenceService {
public:
    /// Models keyed by the name clients use ("digits", "letters").
    explicit InferenceService(std::map<std::string, StoredModel> models, ServiceOptions options = {});

    ServiceResponse predict(std::string_view body) const;
    ServiceResponse health() const;
    ServiceResponse models() const;

    const ServiceOptions& options() const { return options_; }

private:
    struct Entry {
        StoredModel stored;
        Model<float> model;
    };
    std::map<std::string, Entry> models_;
    ServiceOptions options_;
};

/// Loads <dir>/digits and <dir>/letters when present.
std::map<std::string, StoredModel> load_model_dir(const std::filesystem::path& dir);

/// HTTP front end: POST /api/predict, GET /api/health, GET /api/models.
class HttpServer {
public:
    explicit HttpServer(const InferenceService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the bound port
    /// or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Call after bind().
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace huruf
