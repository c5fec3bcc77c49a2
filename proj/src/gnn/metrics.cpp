#include "gnn/metrics.hpp"

namespace como::gnn {

namespace {

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

}  // namespace

MetricsReport evaluate(const Confusion& counts)
{
    constexpr std::size_t k = geo::kFunctionCount;
    MetricsReport r;
    r.confusion = counts;
    long long total = 0, correct = 0;
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t t = 0; t < k; ++t) {
            if (counts[p][t] < 0) throw DataError("confusion matrix has negative counts");
            total += counts[p][t];
            r.per_class[t].support += counts[p][t];
            r.per_class[p].predicted += counts[p][t];
        }
    if (total == 0) throw DataError("confusion matrix is empty");
    for (std::size_t c = 0; c < k; ++c) correct += counts[c][c];

    for (std::size_t c = 0; c < k; ++c) {
        auto& m = r.per_class[c];
        const double tp = static_cast<double>(counts[c][c]);
        m.precision = safe_div(tp, static_cast<double>(m.predicted));
        m.recall = safe_div(tp, static_cast<double>(m.support));
        m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
        if (m.support > 0 || m.predicted > 0) r.present.push_back(c);
    }

    const double n = static_cast<double>(total);
    r.accuracy = static_cast<double>(correct) / n;
    // Single-label: every error is one false positive and one false negative.
    r.micro_precision = r.micro_recall = r.micro_f1 = r.accuracy;

    for (std::size_t c : r.present) {
        const auto& m = r.per_class[c];
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        const double w = static_cast<double>(m.support) / n;
        r.weighted_precision += w * m.precision;
        r.weighted_f1 += w * m.f1;
    }
    // Support-weighted recall telescopes to correct / total.
    r.weighted_recall = r.accuracy;
    const double present = static_cast<double>(r.present.size());
    r.macro_precision /= present;
    r.macro_recall /= present;
    r.macro_f1 /= present;
    return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r)
{
    nlohmann::ordered_json j;
    auto labels = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < geo::kFunctionCount; ++c)
        labels.push_back(std::string(geo::function_name(static_cast<geo::UrbanFunction>(c))));
    j["labels"] = labels;
    j["confusion_pred_by_true"] = r.confusion;
    j["overall_accuracy"] = r.accuracy;
    j["micro_precision"] = r.micro_precision;
    j["micro_recall"] = r.micro_recall;
    j["micro_f1"] = r.micro_f1;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    j["weighted_precision"] = r.weighted_precision;
    j["weighted_recall"] = r.weighted_recall;
    j["weighted_f1"] = r.weighted_f1;
    auto per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < geo::kFunctionCount; ++c) {
        const auto& m = r.per_class[c];
        per[std::string(geo::function_name(static_cast<geo::UrbanFunction>(c)))] = {
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    j["per_class"] = per;
    return j;
}

}  // namespace como::gnn
