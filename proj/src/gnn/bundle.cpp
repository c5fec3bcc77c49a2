#include "gnn/bundle.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "nn/optim.hpp"

namespace como::gnn {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const ModelConfig& c)
{
    ordered_json j;
    j["in_features"] = c.in_features;
    j["conv_layers"] = c.conv_layers;
    j["hidden"] = c.hidden;
    j["pool_rate"] = c.pool_rate;
    j["classes"] = c.classes;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["split_train"] = c.split_train;
    j["split_val"] = c.split_val;
    j["split_test"] = c.split_test;
    j["folds"] = c.folds;
    j["optimizer"] = c.optimizer;
    return j;
}

ModelConfig config_from_json(const json& j)
{
    if (!j.is_object()) throw DataError("model config must be a JSON object");
    ModelConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "in_features") c.in_features = v.get<std::size_t>();
            else if (key == "conv_layers") c.conv_layers = v.get<std::size_t>();
            else if (key == "hidden") c.hidden = v.get<std::size_t>();
            else if (key == "pool_rate") c.pool_rate = v.get<double>();
            else if (key == "classes") c.classes = v.get<std::size_t>();
            else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
            else if (key == "lr") c.lr = v.get<double>();
            else if (key == "max_epochs") c.max_epochs = v.get<std::size_t>();
            else if (key == "patience") c.patience = v.get<std::size_t>();
            else if (key == "split_train") c.split_train = v.get<double>();
            else if (key == "split_val") c.split_val = v.get<double>();
            else if (key == "split_test") c.split_test = v.get<double>();
            else if (key == "folds") c.folds = v.get<std::size_t>();
            else if (key == "optimizer") c.optimizer = v.get<std::string>();
            else throw DataError("unknown model config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bad model config value: ") + e.what());
    }
    return c;
}

ordered_json to_json(const morpho::Standardizer& s)
{
    ordered_json j;
    j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
    j["stddev"] = std::vector<double>(s.stddev.data(), s.stddev.data() + s.stddev.size());
    j["constant"] = s.constant;
    return j;
}

morpho::Standardizer standardizer_from_json(const json& j)
{
    morpho::Standardizer s;
    try {
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto sd = j.at("stddev").get<std::vector<double>>();
        s.constant = j.at("constant").get<std::vector<bool>>();
        if (mean.size() != sd.size() || mean.size() != s.constant.size())
            throw DataError("standardizer arrays differ in length");
        s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        s.stddev = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    } catch (const json::exception& e) {
        throw DataError(std::string("bad standardizer: ") + e.what());
    }
    return s;
}

void save_bundle(std::ostream& out, const Model& model, const morpho::Standardizer& standardizer)
{
    std::stringstream ckpt;
    nn::save_checkpoint(ckpt, model.parameters());
    ordered_json j;
    j["format"] = "como-model";
    j["version"] = 1;
    j["config"] = to_json(model.config());
    j["standardizer"] = to_json(standardizer);
    j["weights"] = ordered_json::parse(ckpt.str());
    out << j.dump() << '\n';
    if (!out) throw IoError("failed to write model bundle");
}

Bundle load_bundle(std::istream& in)
{
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("model bundle is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "como-model") throw DataError("not a model bundle");
    if (j.value("version", 0) != 1) throw DataError("unsupported model bundle version");
    if (!j.contains("config") || !j.contains("standardizer") || !j.contains("weights"))
        throw DataError("model bundle is missing a section");
    Bundle b{Model(config_from_json(j["config"]), 0), standardizer_from_json(j["standardizer"])};
    if (b.standardizer.mean.size() != static_cast<Eigen::Index>(b.model.config().in_features))
        throw DataError("standardizer width does not match the model");
    std::stringstream ckpt(j["weights"].dump());
    nn::load_checkpoint(ckpt, b.model.parameters());
    return b;
}

}  // namespace como::gnn
