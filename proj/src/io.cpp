#include "mst/io.hpp"

#include "mst/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <unistd.h>

namespace mst {

std::string_view to_string(DataFormat f) {
    return f == DataFormat::choice_long ? "choice-long" : "auction-flat";
}

DataFormat parse_data_format(std::string_view name) {
    if (name == "choice-long") {
        return DataFormat::choice_long;
    }
    if (name == "auction-flat") {
        return DataFormat::auction_flat;
    }
    throw Error("unknown data format '" + std::string(name) + "'");
}

bool RowFilter::keep(double x) const {
    switch (op) {
    case Op::le:
        return x <= value;
    case Op::lt:
        return x < value;
    case Op::ge:
        return x >= value;
    case Op::gt:
        return x > value;
    case Op::eq:
        return x == value;
    }
    return true;
}

namespace {

std::optional<double> parse_real(std::string_view s) {
    while (!s.empty() && s.front() == ' ') {
        s.remove_prefix(1);
    }
    while (!s.empty() && s.back() == ' ') {
        s.remove_suffix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<long long> parse_integer(std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

} // namespace

RowFilter parse_filter(std::string_view text) {
    static const std::pair<std::string_view, RowFilter::Op> ops[] = {
        {"<=", RowFilter::Op::le}, {">=", RowFilter::Op::ge}, {"==", RowFilter::Op::eq},
        {"<", RowFilter::Op::lt},  {">", RowFilter::Op::gt},  {"=", RowFilter::Op::eq}};
    for (const auto& [tok, op] : ops) {
        const auto pos = text.find(tok);
        if (pos == std::string_view::npos || pos == 0) {
            continue;
        }
        RowFilter f;
        f.column = std::string(text.substr(0, pos));
        f.op = op;
        const auto v = parse_real(text.substr(pos + tok.size()));
        if (!v) {
            throw Error("filter '" + std::string(text) + "' needs a numeric bound");
        }
        f.value = *v;
        while (!f.column.empty() && f.column.back() == ' ') {
            f.column.pop_back();
        }
        return f;
    }
    throw Error("cannot parse filter '" + std::string(text) + "' (expected e.g. price<=4000)");
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty() || was_quoted) {
                throw Error("stray quote inside an unquoted field");
            }
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) {
                throw Error("characters after a closing quote");
            }
            cur.push_back(c);
        }
    }
    if (quoted) {
        throw Error("unterminated quoted field");
    }
    out.push_back(std::move(cur));
    return out;
}

namespace {

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    return out + "\"";
}

struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Record> records;
};

Table read_table(std::string_view text, const std::string& source) {
    Table t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            if (pos > text.size()) {
                break;
            }
            continue;
        }
        std::vector<std::string> fields;
        try {
            fields = split_csv_line(line);
        } catch (const Error& e) {
            throw IngestError(source, line_no, e.what());
        }
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            std::set<std::string> seen;
            for (const auto& h : t.header) {
                if (!seen.insert(h).second) {
                    throw IngestError(source, line_no, "duplicate column '" + h + "'");
                }
            }
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw IngestError(source, line_no,
                              "expected " + std::to_string(t.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        t.records.push_back({line_no, std::move(fields)});
    }
    if (!have_header) {
        throw IngestError(source, 1, "missing header row");
    }
    return t;
}

/// Column roles resolved from the header.
struct Layout {
    std::vector<std::size_t> ctx_cols;
    std::vector<ContextVariable> ctx_vars;
    std::vector<std::size_t> feat_cols;
    std::vector<std::string> feat_names;
    std::optional<std::size_t> session, option, chosen, bid, win, row_id, latent;
    /// Filter column index per filter.
    std::vector<std::size_t> filter_cols;
};

Layout resolve_layout(const Table& t, DataFormat format, const IngestOptions& opts, const std::string& source) {
    Layout l;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        const std::string& h = t.header[i];
        if (h.rfind("x_", 0) == 0) {
            l.ctx_cols.push_back(i);
            l.ctx_vars.push_back({h.substr(2), VariableKind::numeric, {}});
        } else if (h.rfind("c_", 0) == 0) {
            l.ctx_cols.push_back(i);
            l.ctx_vars.push_back({h.substr(2), VariableKind::categorical, {}});
        } else if (h.rfind("p_", 0) == 0 && format == DataFormat::choice_long) {
            l.feat_cols.push_back(i);
            l.feat_names.push_back(h.substr(2));
        } else if (h == "session_id" && format == DataFormat::choice_long) {
            l.session = i;
        } else if (h == "option_id" && format == DataFormat::choice_long) {
            l.option = i;
        } else if (h == "chosen" && format == DataFormat::choice_long) {
            l.chosen = i;
        } else if (h == "bid" && format == DataFormat::auction_flat) {
            l.bid = i;
        } else if (h == "win" && format == DataFormat::auction_flat) {
            l.win = i;
        } else if (h == "row_id" && format == DataFormat::auction_flat) {
            l.row_id = i;
        } else if (h == "latent") {
            l.latent = i;
        } else {
            throw IngestError(source, 1, "unrecognized column '" + h + "' for " + std::string(to_string(format)));
        }
    }
    auto need = [&](const std::optional<std::size_t>& c, const char* name) {
        if (!c) {
            throw IngestError(source, 1, std::string("missing required column '") + name + "'");
        }
    };
    if (format == DataFormat::choice_long) {
        need(l.session, "session_id");
        need(l.option, "option_id");
        need(l.chosen, "chosen");
        if (l.feat_cols.empty()) {
            throw IngestError(source, 1, "choice-long data needs at least one p_<name> option feature column");
        }
    } else {
        need(l.bid, "bid");
        need(l.win, "win");
    }
    for (const auto& f : opts.filters) {
        std::optional<std::size_t> col;
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            const std::string& h = t.header[i];
            const bool prefixed = h.size() > 2 && h[1] == '_' && (h[0] == 'x' || h[0] == 'p' || h[0] == 'c');
            if (h == f.column || (prefixed && h.substr(2) == f.column)) {
                col = i;
                break;
            }
        }
        if (!col) {
            throw IngestError(source, 1, "filter column '" + f.column + "' not found");
        }
        l.filter_cols.push_back(*col);
    }
    return l;
}

ContextSchema build_schema(const Table& t, const Layout& l, const IngestOptions& opts, const std::string& source) {
    std::vector<ContextVariable> vars = l.ctx_vars;
    if (opts.schema_hint) {
        const auto& hint = *opts.schema_hint;
        if (hint.size() != vars.size()) {
            throw IngestError(source, 1, "context columns do not match the model schema");
        }
        for (std::size_t j = 0; j < vars.size(); ++j) {
            if (hint[j].name != vars[j].name || hint[j].kind != vars[j].kind) {
                throw IngestError(source, 1, "context column '" + vars[j].name + "' does not match the model schema");
            }
            vars[j].categories = hint[j].categories;
        }
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (vars[j].kind != VariableKind::categorical) {
            continue;
        }
        std::set<std::string> extra;
        std::set<std::string> known(vars[j].categories.begin(), vars[j].categories.end());
        for (const auto& r : t.records) {
            const auto& v = r.fields[l.ctx_cols[j]];
            if (v.empty()) {
                throw IngestError(source, r.line, "missing value for '" + vars[j].name + "'");
            }
            if (!known.count(v)) {
                extra.insert(v);
            }
        }
        vars[j].categories.insert(vars[j].categories.end(), extra.begin(), extra.end());
    }
    return ContextSchema(std::move(vars));
}

double field_real(const Record& r, std::size_t col, const std::string& name, const std::string& source) {
    const auto v = parse_real(r.fields[col]);
    if (!v) {
        throw IngestError(source, r.line, "non-numeric value '" + r.fields[col] + "' in column '" + name + "'");
    }
    return *v;
}

long long field_int(const Record& r, std::size_t col, const std::string& name, const std::string& source) {
    const auto v = parse_integer(r.fields[col]);
    if (!v) {
        throw IngestError(source, r.line, "non-integer value '" + r.fields[col] + "' in column '" + name + "'");
    }
    return *v;
}

std::vector<double> read_context(const Record& r, const Layout& l, const ContextSchema& schema,
                                 const std::vector<std::string>& header, const std::string& source) {
    std::vector<double> x(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (schema[j].kind == VariableKind::numeric) {
            x[j] = field_real(r, l.ctx_cols[j], header[l.ctx_cols[j]], source);
        } else {
            x[j] = schema.category_code(j, r.fields[l.ctx_cols[j]]);
        }
    }
    return x;
}

bool passes_filters(const Record& r, const Layout& l, const IngestOptions& opts, const std::vector<std::string>& header,
                    const std::string& source) {
    for (std::size_t f = 0; f < opts.filters.size(); ++f) {
        const double v = field_real(r, l.filter_cols[f], header[l.filter_cols[f]], source);
        if (!opts.filters[f].keep(v)) {
            return false;
        }
    }
    return true;
}

Dataset ingest_choice(const Table& t, const IngestOptions& opts, const std::string& source) {
    const auto l = resolve_layout(t, DataFormat::choice_long, opts, source);
    const auto schema = build_schema(t, l, opts, source);
    Dataset data(schema, PayloadKind::choice, l.feat_cols.size(), l.feat_names);

    struct Session {
        std::string id;
        std::size_t first_line = 0;
        std::vector<double> context;
        std::vector<std::string> raw_context;
        std::vector<double> features;
        std::vector<int> ids;
        int choice = 0;
        std::size_t chosen_line = 0;
        bool filtered_chosen = false;
        int latent = -1;
    };
    std::vector<Session> sessions;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : t.records) {
        const std::string& sid = r.fields[*l.session];
        if (sid.empty()) {
            throw IngestError(source, r.line, "empty session_id");
        }
        auto [it, fresh] = index.try_emplace(sid, sessions.size());
        std::vector<std::string> raw;
        for (std::size_t c : l.ctx_cols) {
            raw.push_back(r.fields[c]);
        }
        if (fresh) {
            Session s;
            s.id = sid;
            s.first_line = r.line;
            s.context = read_context(r, l, schema, t.header, source);
            s.raw_context = raw;
            sessions.push_back(std::move(s));
        }
        Session& s = sessions[it->second];
        if (!fresh && raw != s.raw_context) {
            throw IngestError(source, r.line,
                              "context differs from earlier lines of session '" + sid + "' (line " +
                                  std::to_string(s.first_line) + ")");
        }
        const long long chosen = field_int(r, *l.chosen, "chosen", source);
        if (chosen != 0 && chosen != 1) {
            throw IngestError(source, r.line, "chosen must be 0 or 1");
        }
        if (chosen == 1) {
            if (s.chosen_line != 0) {
                throw IngestError(source, r.line,
                                  "session '" + sid + "' has a second chosen option (first on line " +
                                      std::to_string(s.chosen_line) + ")");
            }
            s.chosen_line = r.line;
        }
        const long long oid = field_int(r, *l.option, "option_id", source);
        if (oid < 0 || oid > 1'000'000) {
            throw IngestError(source, r.line, "option_id must be in [0, 1000000]");
        }
        if (l.latent) {
            const long long lat = field_int(r, *l.latent, "latent", source);
            if (!fresh && lat != s.latent) {
                throw IngestError(source, r.line, "latent differs within session '" + sid + "'");
            }
            s.latent = static_cast<int>(lat);
        }
        std::vector<double> feats;
        for (std::size_t c : l.feat_cols) {
            feats.push_back(field_real(r, c, t.header[c], source));
        }
        if (!passes_filters(r, l, opts, t.header, source)) {
            s.filtered_chosen = s.filtered_chosen || chosen == 1;
            continue;
        }
        if (std::find(s.ids.begin(), s.ids.end(), static_cast<int>(oid)) != s.ids.end()) {
            throw IngestError(source, r.line, "option_id repeated within session '" + sid + "'");
        }
        s.features.insert(s.features.end(), feats.begin(), feats.end());
        s.ids.push_back(static_cast<int>(oid));
        if (chosen == 1) {
            s.choice = static_cast<int>(s.ids.size());
        }
    }
    for (auto& s : sessions) {
        // A session whose purchase was filtered away, or with nothing left to offer, is dropped.
        if (s.filtered_chosen || s.ids.empty()) {
            continue;
        }
        data.add_choice(s.context, s.features, s.ids, s.choice, s.id, s.latent);
    }
    return data;
}

Dataset ingest_auction(const Table& t, const IngestOptions& opts, const std::string& source) {
    const auto l = resolve_layout(t, DataFormat::auction_flat, opts, source);
    const auto schema = build_schema(t, l, opts, source);
    Dataset data(schema, PayloadKind::auction);
    for (const auto& r : t.records) {
        const auto x = read_context(r, l, schema, t.header, source);
        const double bid = field_real(r, *l.bid, "bid", source);
        if (bid < 0.0) {
            throw IngestError(source, r.line, "bid must be non-negative");
        }
        const long long win = field_int(r, *l.win, "win", source);
        if (win != 0 && win != 1) {
            throw IngestError(source, r.line, "win must be 0 or 1");
        }
        const int latent = l.latent ? static_cast<int>(field_int(r, *l.latent, "latent", source)) : -1;
        if (!passes_filters(r, l, opts, t.header, source)) {
            continue;
        }
        data.add_auction(x, bid, static_cast<int>(win), l.row_id ? r.fields[*l.row_id] : std::string(), latent);
    }
    return data;
}

} // namespace

Dataset ingest_text(std::string_view text, DataFormat format, const IngestOptions& options,
                    const std::string& source) {
    const auto table = read_table(text, source);
    try {
        return format == DataFormat::choice_long ? ingest_choice(table, options, source)
                                                 : ingest_auction(table, options, source);
    } catch (const IngestError&) {
        throw;
    } catch (const Error& e) {
        throw IngestError(source, 0, e.what());
    }
}

Dataset ingest(const std::string& path, DataFormat format, const IngestOptions& options) {
    return ingest_text(read_file(path), format, options, path);
}

std::string format_csv_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string export_text(const Dataset& data) {
    std::ostringstream os;
    const auto& schema = data.schema();
    auto context_header = [&] {
        std::string h;
        for (const auto& v : schema.variables()) {
            h += (v.kind == VariableKind::numeric ? ",x_" : ",c_") + quote_csv(v.name);
        }
        return h;
    };
    auto context_fields = [&](std::size_t r) {
        std::string s;
        for (std::size_t j = 0; j < schema.size(); ++j) {
            s += ',';
            const double v = data.context_value(r, j);
            s += schema[j].kind == VariableKind::numeric
                     ? format_csv_real(v)
                     : quote_csv(schema[j].categories.at(static_cast<std::size_t>(v)));
        }
        return s;
    };
    if (data.kind() == PayloadKind::choice) {
        os << "session_id,option_id,chosen" << context_header();
        for (const auto& f : data.option_feature_names()) {
            os << ",p_" << quote_csv(f);
        }
        if (data.has_latent()) {
            os << ",latent";
        }
        os << '\n';
        for (std::size_t r = 0; r < data.size(); ++r) {
            const auto ctx = context_fields(r);
            const auto feats = data.options(r);
            const auto ids = data.option_ids(r);
            for (std::size_t h = 0; h < ids.size(); ++h) {
                os << quote_csv(data.row_id(r)) << ',' << ids[h] << ','
                   << (data.choice(r) == static_cast<int>(h + 1) ? 1 : 0) << ctx;
                for (std::size_t c = 0; c < data.option_dim(); ++c) {
                    os << ',' << format_csv_real(feats[h * data.option_dim() + c]);
                }
                if (data.has_latent()) {
                    os << ',' << data.latent(r);
                }
                os << '\n';
            }
        }
    } else {
        // Header starts with row_id so that a schema without context still parses.
        os << "row_id" << context_header() << ",bid,win";
        if (data.has_latent()) {
            os << ",latent";
        }
        os << '\n';
        for (std::size_t r = 0; r < data.size(); ++r) {
            os << quote_csv(data.row_id(r)) << context_fields(r) << ',' << format_csv_real(data.bid(r)) << ','
               << data.win(r);
            if (data.has_latent()) {
                os << ',' << data.latent(r);
            }
            os << '\n';
        }
    }
    return os.str();
}

void export_file(const Dataset& data, const std::string& path) { write_atomic(path, export_text(data)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot move output into place at '" + path + "'");
    }
}

} // namespace mst
