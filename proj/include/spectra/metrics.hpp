#ifndef SPECTRA_METRICS_HPP
#define SPECTRA_METRICS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/image_io.hpp"

namespace spectra {

/// K x K counts, rows = truth, columns = prediction.
class ConfusionMatrix {
public:
    ConfusionMatrix(int k, std::vector<std::string> class_names);
    explicit ConfusionMatrix(const std::vector<std::vector<std::int64_t>>& counts,
                             std::vector<std::string> class_names = {});

    int k() const { return k_; }
    const std::vector<std::string>& class_names() const { return names_; }

    std::int64_t at(int truth, int pred) const {
        return counts_[static_cast<std::size_t>(truth) * k_ + pred];
    }
    void add(int truth, int pred, std::int64_t n = 1);

    std::int64_t total() const;
    std::int64_t row_sum(int truth) const;
    std::int64_t col_sum(int pred) const;
    std::int64_t trace() const;

private:
    int k_;
    std::vector<std::string> names_;
    std::vector<std::int64_t> counts_;
};

/// One classified item, optionally with the per-class score vector.
struct PredictionRecord {
    std::string id;
    ClassLabel truth;
    ClassLabel predicted;
    std::optional<std::array<double, ClassLabel::kCount>> scores;
};

struct PerClassStats {
    std::string name;
    double precision;
    double recall;
    double f1;
};

struct MetricsReport {
    double accuracy;
    double balanced_accuracy;
    double mcc;
    double macro_f1;
    std::vector<PerClassStats> per_class;
    std::optional<double> auc_ovr_macro;
    std::vector<std::vector<std::int64_t>> confusion;
    std::vector<std::string> class_names;
};

ConfusionMatrix confusion_from_records(const std::vector<PredictionRecord>& records);

/// trace / total.
double accuracy(const ConfusionMatrix& cm);

/// Unweighted mean of per-class recall; throws EmptyClass when a class
/// has zero truth count.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Gorodkin multiclass MCC:
/// (c*s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2)).
/// Returns 0 when either variance factor vanishes.
double mcc_multiclass(const ConfusionMatrix& cm);

struct MacroF1Result {
    double macro_f1;
    std::vector<PerClassStats> per_class;
};

/// Per-class precision/recall/F1 (zero-denominator convention: 0) and
/// their unweighted means.
MacroF1Result macro_f1(const ConfusionMatrix& cm);

/// Rank-based binary AUC (Mann-Whitney with midrank tie correction).
/// Equals (wins + ties/2) / (n_pos * n_neg) over positive-negative pairs.
double auc_binary(const std::vector<double>& scores, const std::vector<bool>& is_positive);

/// One-vs-rest macro AUC; per class, auc_binary of score[c] for class-c
/// against the rest. Throws DegenerateClass when a class has no
/// positives or no negatives.
double auc_ovr_macro(const std::vector<PredictionRecord>& records);

/// Full report from records (AUC included only when every record
/// carries scores).
MetricsReport compute_report(const std::vector<PredictionRecord>& records);

/// CSV with header `id,true_label,pred_label[,score_0..score_3]`.
/// Labels parse as canonical names or indices; when scores are present,
/// the stated prediction must equal their argmax (lowest index wins ties).
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

/// JSON report with 6-decimal numbers; keys: accuracy,
/// balanced_accuracy, mcc, macro_f1, per_class, auc_ovr_macro, confusion.
void write_report(const MetricsReport& report, const std::filesystem::path& path);
std::string report_to_json(const MetricsReport& report);

} // namespace spectra

#endif
