#pragma once

#include "mst/dataset.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

enum class DataFormat { choice_long, auction_flat };

std::string_view to_string(DataFormat f);
DataFormat parse_data_format(std::string_view name);

/// Numeric row filter "column<=value" (also <, >=, >, =). Rows failing it are
/// removed before sessions are assembled.
struct RowFilter {
    enum class Op { le, lt, ge, gt, eq };
    std::string column;
    Op op = Op::le;
    double value = 0.0;

    bool keep(double x) const;
};

RowFilter parse_filter(std::string_view text);

struct IngestOptions {
    std::vector<RowFilter> filters;
    /// Category codes to reuse (e.g. a trained model's schema); new labels are appended.
    /// Without a hint, labels are coded in lexicographic order.
    std::optional<ContextSchema> schema_hint;
};

/// Splits one CSV record (comma separated, double-quote quoting with "" escapes).
std::vector<std::string> split_csv_line(std::string_view line);

/// Choice-long: one line per (session, option) with columns session_id,
/// option_id, chosen, x_<name> (numeric context), c_<name> (categorical
/// context), p_<name> (option features) and optionally latent. A session with
/// no chosen line is a no-purchase. Auction-flat: one line per auction with
/// x_/c_ context columns, bid, win and optionally row_id, latent.
Dataset ingest(const std::string& path, DataFormat format, const IngestOptions& options = {});
Dataset ingest_text(std::string_view text, DataFormat format, const IngestOptions& options = {},
                    const std::string& source = "<input>");

/// Writes `data` in the format matching its payload.
std::string export_text(const Dataset& data);
void export_file(const Dataset& data, const std::string& path);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, std::string_view content);

/// "%.17g" rendering used by the CSV exporters.
std::string format_csv_real(double v);

} // namespace mst
