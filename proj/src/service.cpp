#include "huruf/service.hpp"

#include <cmath>

#include "httplib.h"
#include "huruf/inference.hpp"

namespace huruf {

namespace {

ServiceResponse error_response(int status, const std::string& message) {
    return {status, nlohmann::json{{"error", message}}};
}

}  // namespace

InferenceService::InferenceService(std::map<std::string, StoredModel> models, ServiceOptions options)
    : options_(std::move(options)) {
    for (auto& [name, stored] : models) {
        Model<float> model(stored.spec, stored.params);
        models_.emplace(name, Entry{std::move(stored), std::move(model)});
    }
}

ServiceResponse InferenceService::predict(std::string_view body) const {
    if (body.size() > options_.max_body_bytes) return error_response(413, "request body exceeds 1 MiB");
    const nlohmann::json req = nlohmann::json::parse(body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) return error_response(400, "request body is not a JSON object");

    const auto model_it = req.find("model");
    if (model_it == req.end() || !model_it->is_string()) return error_response(400, "field 'model' must be a string");
    const auto entry = models_.find(model_it->get<std::string>());
    if (entry == models_.end()) return error_response(404, "unknown model '" + model_it->get<std::string>() + "'");

    const auto px_it = req.find("pixels");
    if (px_it == req.end() || !px_it->is_array()) return error_response(400, "field 'pixels' must be an array");

    std::size_t k = options_.default_topk;
    if (const auto k_it = req.find("topk"); k_it != req.end()) {
        if (!k_it->is_number_unsigned()) return error_response(400, "field 'topk' must be a non-negative integer");
        k = k_it->get<std::size_t>();
    }

    std::vector<float> pixels;
    pixels.reserve(px_it->size());
    for (const auto& v : *px_it) {
        if (!v.is_number()) return error_response(400, "pixel " + std::to_string(pixels.size()) + " is not a finite number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) return error_response(400, "pixel " + std::to_string(pixels.size()) + " is not a finite number");
        pixels.push_back(static_cast<float>(d));
    }

    const Entry& e = entry->second;
    Prediction p;
    try {
        p = predict_pixels(e.model, e.stored.manifest.class_names, pixels, k);
    } catch (const ParameterError& err) {
        return error_response(400, err.what());
    }

    nlohmann::json topk = nlohmann::json::array();
    for (const auto& r : p.topk) topk.push_back({{"name", r.name}, {"index", r.index}, {"probability", r.probability}});
    return {200, nlohmann::json{{"model", entry->first},
                                {"label", p.label},
                                {"class_index", p.class_index},
                                {"probabilities", p.probabilities},
                                {"topk", std::move(topk)}}};
}

ServiceResponse InferenceService::health() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, e] : models_) {
        list.push_back({{"name", name},
                        {"kind", e.stored.manifest.kind},
                        {"input_side", e.stored.spec.input_side},
                        {"class_count", e.stored.spec.num_classes},
                        {"format_version", e.stored.manifest.format_version}});
    }
    return {200, nlohmann::json{{"status", "ok"}, {"models", std::move(list)}}};
}

ServiceResponse InferenceService::models() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, e] : models_) {
        list.push_back({{"name", name},
                        {"kind", e.stored.manifest.kind},
                        {"input_side", e.stored.spec.input_side},
                        {"class_count", e.stored.spec.num_classes},
                        {"class_names", e.stored.manifest.class_names}});
    }
    return {200, nlohmann::json{{"models", std::move(list)}}};
}

std::map<std::string, StoredModel> load_model_dir(const std::filesystem::path& dir) {
    std::map<std::string, StoredModel> out;
    for (const char* name : {"digits", "letters"}) {
        const std::filesystem::path sub = dir / name;
        if (std::filesystem::exists(sub / kManifestFile)) out.emplace(name, load_model(sub));
    }
    return out;
}

struct HttpServer::Impl {
    const InferenceService& service;
    httplib::Server server;

    explicit Impl(const InferenceService& s) : service(s) {}
};

HttpServer::HttpServer(const InferenceService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svr = impl_->server;
    const ServiceOptions& opts = service.options();
    svr.set_payload_max_length(opts.max_body_bytes);

    const std::string origin = opts.cors_origin;
    auto reply = [origin](httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
        res.set_content(r.body.dump(), "application/json");
    };

    svr.Post("/api/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, impl_->service.predict(req.body));
    });
    svr.Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, impl_->service.health());
    });
    svr.Get("/api/models", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, impl_->service.models());
    });
    if (!origin.empty()) {
        svr.Options(R"(/api/.*)", [origin](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
    }
    if (opts.static_dir) svr.set_mount_point("/app", opts.static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace huruf
