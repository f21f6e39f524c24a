#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace promptcls {

enum class BinaryLabel { negative, positive };

inline const char* to_string(BinaryLabel l) {
    return l == BinaryLabel::positive ? "positive" : "negative";
}

// One corpus item: a raw paragraph plus its optional labels.
struct ParagraphRecord {
    std::string id;
    std::string text;
    std::optional<BinaryLabel> binary_label;
    std::vector<std::string> categories;  // subset of the dataset category list
};

// Column mapping for delimiter-separated dataset files.
struct DatasetSchema {
    char delimiter = '\t';
    std::string id_column;
    std::string text_column;
    std::string binary_column;      // empty: column not parsed
    std::string categories_column;  // empty: column not parsed
    std::vector<std::string> category_list;
};

struct Dataset {
    std::vector<ParagraphRecord> records;
    std::vector<std::string> category_list;  // fixed, stable order
    DatasetSchema schema_meta;
};

struct RowDiagnostic {
    std::size_t line_no = 0;  // 1-based, header is line 1
    std::string message;
};

struct LoadResult {
    Dataset dataset;
    std::vector<RowDiagnostic> rejected;
};

// Parses a delimiter-separated file with a header row. Rows violating record
// invariants are dropped and reported in `rejected`; duplicate ids and a
// missing/malformed header are hard errors (DataError).
LoadResult load_dataset(const std::string& path, const DatasetSchema& schema);

// Partition of a dataset into k folds for hold-one-out training.
struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::unordered_map<std::string, int> assignment;  // record id -> fold index

    int fold_of(const std::string& id) const;
};

// Deterministic function of (record ids, k, seed): ids are sorted, shuffled
// with a portable Fisher-Yates, and assigned position % k. Fold sizes differ
// by at most one. With `stratified`, records are grouped by binary label
// first and the round-robin counter runs across groups.
FoldAssignment split_folds(const Dataset& dataset, int k, std::uint64_t seed,
                           bool stratified = false);

// Read-only index view over a dataset.
struct DatasetView {
    const Dataset* base = nullptr;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
    const ParagraphRecord& operator[](std::size_t i) const {
        return base->records[indices[i]];
    }
    std::vector<ParagraphRecord> materialize() const;
};

// (train, validation) for fold i: validation = records in fold i, train = rest.
std::pair<DatasetView, DatasetView> fold_view(const Dataset& dataset,
                                              const FoldAssignment& folds, int i);

// Writes records in the schema's column layout (id and text, then whichever
// label columns the schema configures). Fields must not contain the
// delimiter. Output reloads through load_dataset with the same schema.
void write_dataset(const std::string& path, const Dataset& dataset);

// Manifest format: comment header (k, seed), then one `id<TAB>fold` line per
// record in dataset order.
void write_fold_manifest(const std::string& path, const Dataset& dataset,
                         const FoldAssignment& folds);
FoldAssignment read_fold_manifest(const std::string& path);

}  // namespace promptcls
