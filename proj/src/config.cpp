#include "stagcn/config.hpp"

#include "stagcn/types.hpp"

namespace stagcn {

void RunConfig::validate() const {
    if (window_length < 2) throw DataError("window length L must be at least 2");
    if (effective_stride() < 1) throw DataError("stride must be at least 1");
    if (effective_train_stride() < 1) throw DataError("train stride must be at least 1");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw DataError("threshold T_common must lie in (0, 1], got " + std::to_string(threshold));
    }
    if (hidden < 1) throw DataError("hidden width must be at least 1");
    if (!(learning_rate >= 0.0)) throw DataError("learning rate must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("momentum must lie in [0, 1)");
    if (epochs < 1) throw DataError("epochs must be at least 1");
    if (batch_size < 1) throw DataError("batch size must be at least 1");
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"window_length", window_length},
        {"stride", effective_stride()},
        {"train_stride", effective_train_stride()},
        {"threshold", threshold},
        {"weighted_edges", weighted_edges},
        {"hidden", hidden},
        {"learning_rate", learning_rate},
        {"momentum", momentum},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"seed", seed},
    };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.window_length = j.at("window_length").get<int>();
        c.stride = j.at("stride").get<int>();
        c.train_stride = j.at("train_stride").get<int>();
        c.threshold = j.at("threshold").get<double>();
        c.weighted_edges = j.at("weighted_edges").get<bool>();
        c.hidden = j.at("hidden").get<int>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.momentum = j.at("momentum").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.batch_size = j.at("batch_size").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid config echo: ") + e.what());
    }
    return c;
}

}  // namespace stagcn
