#pragma once

#include <string>
#include <vector>

#include "groklab/trainer.hpp"

namespace groklab {

// CSV header: epoch,train_loss,test_loss,train_acc,test_acc,med,weight_norm_sum,wall_ms.
// The JSONL mirror carries one object per row and additionally logs
// weight_sq_sum (the quantity the optimizer actually decays).
std::string metrics_csv_header();
std::string metrics_row_csv(const MetricsRow& row);
std::string metrics_row_jsonl(const MetricsRow& row);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);
void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_jsonl(const std::string& path);

std::string grokking_report_to_json(const GrokkingReport& report);
GrokkingReport grokking_report_from_json(const std::string& text);

struct ReportOptions {
    bool log_x = false;   // log-scaled epoch axis
    bool raw_med = false; // multiply the MED series by p (needs p > 0)
    int p = 0;
};

// Deterministic two-panel line chart: accuracies on top (linear y), losses
// below (log y) with MED overlaid on its own normalized scale. Byte-stable
// for identical inputs: fixed formatting, no timestamps or generated ids.
std::string render_metrics_svg(const std::vector<MetricsRow>& rows,
                               const ReportOptions& options = {});

}  // namespace groklab
