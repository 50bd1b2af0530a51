#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "v2p/geometry.hpp"

namespace v2p {

/// One grounding annotation: a screenshot descriptor, the instruction, the
/// ground-truth element box, and whatever boxes an external screen parser
/// reported for the same screenshot. Parser boxes are consumed as-is; this
/// code never runs a parser.
struct AnnotationRecord {
    std::string image_id;
    double image_width = 0.0;
    double image_height = 0.0;
    std::string instruction;
    BoundingBox gt_bbox{0.0, 0.0, 1.0, 1.0};
    std::vector<BoundingBox> parser_boxes;
    std::string platform; // optional tag, empty when absent
    std::string category; // optional tag, empty when absent
};

/// A rejected input line: 1-based line number plus what went wrong.
struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<AnnotationRecord> records;
    std::vector<ParseIssue> issues;
};

/// Reads JSON-lines annotations. Well-formed lines become records; malformed
/// ones (bad JSON, missing fields, invalid or out-of-image boxes) are
/// collected as issues and never silently dropped. Blank lines are skipped.
/// Throws DataError if the file cannot be opened.
ParseResult parse_annotations(const std::filesystem::path& path);
ParseResult parse_annotations(std::istream& in);

struct FilterResult {
    std::vector<AnnotationRecord> kept;
    std::vector<AnnotationRecord> dropped;
    /// How many of `dropped` had no parser boxes at all (cannot be validated).
    std::size_t no_parser_count = 0;
};

/// Keeps a record iff the best overlap between its ground-truth box and any
/// of its parser boxes reaches `threshold`; records without parser boxes are
/// dropped and tallied separately. Order-preserving.
/// Throws std::invalid_argument unless threshold is in [0,1].
FilterResult iou_filter(const std::vector<AnnotationRecord>& records, double threshold);

/// Serializes one record back to the JSON object layout parse_annotations
/// accepts (used to write kept/dropped JSONL files).
std::string annotation_to_json_line(const AnnotationRecord& rec);

} // namespace v2p
