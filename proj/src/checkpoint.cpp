#include "neurodavis/model_io.hpp"

#include "neurodavis/error.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

namespace neurodavis {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from(const json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

json layer_json(const DenseLayer& layer) {
    return {{"weights", matrix_json(layer.weights)}, {"bias", layer.bias}};
}

DenseLayer layer_from(const json& j) {
    DenseLayer layer{matrix_from(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    if (layer.bias.size() != layer.weights.cols()) {
        throw InvalidInput("checkpoint: bias length does not match layer width");
    }
    return layer;
}

json layers_json(const std::vector<DenseLayer>& layers) {
    json arr = json::array();
    for (const auto& l : layers) {
        arr.push_back(layer_json(l));
    }
    return arr;
}

std::vector<DenseLayer> layers_from(const json& j) {
    std::vector<DenseLayer> out;
    for (const auto& l : j) {
        out.push_back(layer_from(l));
    }
    return out;
}

json loss_json(const LossTerms& t) {
    return {{"total", t.total}, {"reconstruction", t.reconstruction}, {"activity", t.activity}, {"weight", t.weight}};
}

}  // namespace

json to_json(const ModelConfig& config) {
    json j;
    j["latent_dim"] = config.latent_dim;
    j["hidden_widths"] = config.hidden_widths ? json(*config.hidden_widths) : json(nullptr);
    j["alpha"] = config.alpha;
    j["beta"] = config.beta;
    j["learning_rate"] = config.learning_rate;
    j["adam_beta1"] = config.adam_beta1;
    j["adam_beta2"] = config.adam_beta2;
    j["adam_eps"] = config.adam_eps;
    j["epochs"] = config.epochs;
    j["batch_size"] = config.batch_size ? json(*config.batch_size) : json(nullptr);
    j["seed"] = config.seed;
    if (config.convergence) {
        j["convergence"] = {{"window", config.convergence->window}, {"rel_tol", config.convergence->rel_tol}};
    } else {
        j["convergence"] = nullptr;
    }
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    if (!j.at("hidden_widths").is_null()) {
        c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
    }
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    if (!j.at("batch_size").is_null()) {
        c.batch_size = j.at("batch_size").get<std::size_t>();
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("convergence").is_null()) {
        c.convergence.reset();
    } else {
        c.convergence = ConvergencePolicy{j.at("convergence").at("window").get<std::size_t>(),
                                          j.at("convergence").at("rel_tol").get<double>()};
    }
    validate(c);
    return c;
}

std::string config_hash(const ModelConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json to_json(const TrainReport& report) {
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back(loss_json(e));
    }
    json j = {{"initial_loss", report.initial_loss},
              {"epochs_run", report.epochs_run},
              {"converged", report.converged},
              {"wall_seconds", report.wall_seconds},
              {"epochs", std::move(epochs)}};
    j["final"] = report.epochs.empty() ? json(nullptr) : loss_json(report.epochs.back());
    return j;
}

json checkpoint_to_json(const ModelConfig& config, const Model& model) {
    return {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"config", to_json(config)},
            {"samples", model.samples()},
            {"output_dim", model.output_dim()},
            {"latent", matrix_json(model.latent)},
            {"layers", layers_json(model.layers)},
            {"adam",
             {{"step", model.adam.step},
              {"latent_m", matrix_json(model.adam.latent_m)},
              {"latent_v", matrix_json(model.adam.latent_v)},
              {"layers_m", layers_json(model.adam.layers_m)},
              {"layers_v", layers_json(model.adam.layers_v)}}}};
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", "") != kCheckpointFormat) {
        throw InvalidInput("not a neurodavis checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw InvalidInput("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    Checkpoint cp;
    cp.config = config_from_json(j.at("config"));
    cp.model.latent = matrix_from(j.at("latent"));
    cp.model.layers = layers_from(j.at("layers"));
    const json& adam = j.at("adam");
    cp.model.adam.step = adam.at("step").get<std::uint64_t>();
    cp.model.adam.latent_m = matrix_from(adam.at("latent_m"));
    cp.model.adam.latent_v = matrix_from(adam.at("latent_v"));
    cp.model.adam.layers_m = layers_from(adam.at("layers_m"));
    cp.model.adam.layers_v = layers_from(adam.at("layers_v"));

    const Model& m = cp.model;
    if (m.layers.empty() || m.adam.layers_m.size() != m.layers.size() || m.adam.layers_v.size() != m.layers.size()) {
        throw InvalidInput("checkpoint: layer lists are inconsistent");
    }
    std::size_t width = m.latent.cols();
    for (const auto& layer : m.layers) {
        if (layer.weights.rows() != width) {
            throw InvalidInput("checkpoint: layer shapes do not chain");
        }
        width = layer.weights.cols();
    }
    return cp;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << checkpoint_to_json(config, model).dump() << '\n';
    if (!out) {
        throw InvalidInput("failed writing " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    return checkpoint_from_json(json::parse(in));
}

}  // namespace neurodavis
