#include "promptcls/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "promptcls/errors.hpp"
#include "promptcls/rng.hpp"

namespace promptcls {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& tok : split(s, ',')) {
        const std::string t = trim(tok);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::optional<BinaryLabel> parse_binary(const std::string& raw, bool& ok) {
    ok = true;
    std::string v = trim(raw);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v.empty()) return std::nullopt;
    if (v == "positive" || v == "1") return BinaryLabel::positive;
    if (v == "negative" || v == "0") return BinaryLabel::negative;
    ok = false;
    return std::nullopt;
}

}  // namespace

LoadResult load_dataset(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("dataset file not found: " + path);
    if (schema.id_column.empty() || schema.text_column.empty())
        throw UsageError("schema must name the id and text columns");

    std::string header;
    if (!std::getline(in, header)) throw DataError("dataset file is empty (no header): " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();

    const auto columns = split(header, schema.delimiter);
    auto find_col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (trim(columns[i]) == name) return static_cast<int>(i);
        return -1;
    };
    const int id_col = find_col(schema.id_column);
    const int text_col = find_col(schema.text_column);
    if (id_col < 0) throw DataError("header lacks id column '" + schema.id_column + "'");
    if (text_col < 0) throw DataError("header lacks text column '" + schema.text_column + "'");
    int binary_col = -1;
    if (!schema.binary_column.empty()) {
        binary_col = find_col(schema.binary_column);
        if (binary_col < 0)
            throw DataError("header lacks binary label column '" + schema.binary_column + "'");
    }
    int cat_col = -1;
    if (!schema.categories_column.empty()) {
        cat_col = find_col(schema.categories_column);
        if (cat_col < 0)
            throw DataError("header lacks category column '" + schema.categories_column + "'");
    }

    const std::unordered_set<std::string> known_cats(schema.category_list.begin(),
                                                     schema.category_list.end());

    LoadResult result;
    result.dataset.category_list = schema.category_list;
    result.dataset.schema_meta = schema;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split(line, schema.delimiter);
        if (fields.size() != columns.size()) {
            result.rejected.push_back({line_no, "expected " + std::to_string(columns.size()) +
                                                    " fields, got " + std::to_string(fields.size())});
            continue;
        }

        ParagraphRecord rec;
        rec.id = trim(fields[id_col]);
        rec.text = fields[text_col];
        if (rec.id.empty()) {
            result.rejected.push_back({line_no, "empty id"});
            continue;
        }
        if (trim(rec.text).empty()) {
            result.rejected.push_back({line_no, "empty text"});
            continue;
        }

        if (binary_col >= 0) {
            bool ok = true;
            rec.binary_label = parse_binary(fields[binary_col], ok);
            if (!ok) {
                result.rejected.push_back(
                    {line_no, "unrecognized binary label '" + trim(fields[binary_col]) + "'"});
                continue;
            }
        }

        if (cat_col >= 0) {
            rec.categories = split_commas(fields[cat_col]);
            bool bad = false;
            for (const auto& c : rec.categories) {
                if (!known_cats.count(c)) {
                    result.rejected.push_back({line_no, "unknown category identifier '" + c + "'"});
                    bad = true;
                    break;
                }
            }
            if (bad) continue;
            if (!rec.categories.empty() && binary_col >= 0 &&
                (!rec.binary_label || *rec.binary_label != BinaryLabel::positive)) {
                result.rejected.push_back(
                    {line_no, "categories present on a record whose binary label is not positive"});
                continue;
            }
        }

        if (!seen_ids.insert(rec.id).second)
            throw DataError("duplicate record id '" + rec.id + "' at line " +
                            std::to_string(line_no));
        result.dataset.records.push_back(std::move(rec));
    }
    return result;
}

int FoldAssignment::fold_of(const std::string& id) const {
    const auto it = assignment.find(id);
    if (it == assignment.end()) throw DataError("record id not in fold assignment: " + id);
    return it->second;
}

FoldAssignment split_folds(const Dataset& dataset, int k, std::uint64_t seed, bool stratified) {
    const std::size_t n = dataset.records.size();
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw UsageError("fold count k must satisfy 2 <= k <= number of records (k=" +
                         std::to_string(k) + ", n=" + std::to_string(n) + ")");

    // Strata: negative, positive, unlabeled. A single stratum when not stratified.
    std::vector<std::vector<std::string>> strata(stratified ? 3 : 1);
    std::unordered_map<std::string, std::size_t> stratum_of;
    if (stratified) {
        for (const auto& rec : dataset.records) {
            std::size_t s = 2;
            if (rec.binary_label) s = *rec.binary_label == BinaryLabel::positive ? 1 : 0;
            stratum_of[rec.id] = s;
        }
    }
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& rec : dataset.records) ids.push_back(rec.id);
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) strata[stratified ? stratum_of[id] : 0].push_back(id);

    FoldAssignment folds;
    folds.k = k;
    folds.seed = seed;
    Rng rng(seed);
    std::size_t position = 0;
    for (auto& stratum : strata) {
        rng.shuffle(stratum);
        for (const auto& id : stratum) {
            folds.assignment[id] = static_cast<int>(position % static_cast<std::size_t>(k));
            ++position;
        }
    }
    return folds;
}

std::vector<ParagraphRecord> DatasetView::materialize() const {
    std::vector<ParagraphRecord> out;
    out.reserve(indices.size());
    for (const std::size_t i : indices) out.push_back(base->records[i]);
    return out;
}

std::pair<DatasetView, DatasetView> fold_view(const Dataset& dataset,
                                              const FoldAssignment& folds, int i) {
    if (i < 0 || i >= folds.k)
        throw UsageError("fold index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(folds.k) + ")");
    DatasetView train{&dataset, {}}, validation{&dataset, {}};
    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        if (folds.fold_of(dataset.records[r].id) == i)
            validation.indices.push_back(r);
        else
            train.indices.push_back(r);
    }
    return {std::move(train), std::move(validation)};
}

void write_dataset(const std::string& path, const Dataset& dataset) {
    const DatasetSchema& schema = dataset.schema_meta;
    if (schema.id_column.empty() || schema.text_column.empty())
        throw UsageError("dataset schema must name the id and text columns");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset: " + path);

    const char d = schema.delimiter;
    auto check_field = [&](const std::string& value) -> const std::string& {
        if (value.find(d) != std::string::npos)
            throw DataError("field contains the delimiter: " + value);
        return value;
    };

    out << schema.id_column << d << schema.text_column;
    if (!schema.binary_column.empty()) out << d << schema.binary_column;
    if (!schema.categories_column.empty()) out << d << schema.categories_column;
    out << '\n';

    for (const ParagraphRecord& rec : dataset.records) {
        out << check_field(rec.id) << d << check_field(rec.text);
        if (!schema.binary_column.empty()) {
            out << d;
            if (rec.binary_label) out << to_string(*rec.binary_label);
        }
        if (!schema.categories_column.empty()) {
            out << d;
            for (std::size_t i = 0; i < rec.categories.size(); ++i) {
                if (i) out << ',';
                out << check_field(rec.categories[i]);
            }
        }
        out << '\n';
    }
    if (!out) throw DataError("write failure on dataset: " + path);
}

void write_fold_manifest(const std::string& path, const Dataset& dataset,
                         const FoldAssignment& folds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fold manifest: " + path);
    out << "# k=" << folds.k << " seed=" << folds.seed << "\n";
    for (const auto& rec : dataset.records) out << rec.id << '\t' << folds.fold_of(rec.id) << '\n';
    if (!out) throw DataError("write failure on fold manifest: " + path);
}

FoldAssignment read_fold_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("fold manifest not found: " + path);
    FoldAssignment folds;
    std::string line;
    int max_fold = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                if (tok.rfind("k=", 0) == 0) folds.k = std::stoi(tok.substr(2));
                if (tok.rfind("seed=", 0) == 0) folds.seed = std::stoull(tok.substr(5));
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw DataError("malformed manifest line: " + line);
        const std::string id = line.substr(0, tab);
        const int fold = std::stoi(line.substr(tab + 1));
        if (folds.assignment.count(id)) throw DataError("duplicate id in manifest: " + id);
        folds.assignment[id] = fold;
        max_fold = std::max(max_fold, fold);
    }
    if (folds.k == 0) folds.k = max_fold + 1;
    if (folds.k < 2 || folds.assignment.empty()) throw DataError("manifest has no usable folds: " + path);
    return folds;
}

}  // namespace promptcls
