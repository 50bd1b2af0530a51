#include "v2p/ingest.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "v2p/error.hpp"

namespace v2p {

namespace {

using nlohmann::json;

BoundingBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw std::invalid_argument("box must be an array [x1,y1,x2,y2]");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw std::invalid_argument("box coordinates must be numbers");
    }
    return BoundingBox(j[0].get<double>(), j[1].get<double>(),
                       j[2].get<double>(), j[3].get<double>());
}

AnnotationRecord record_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
    for (const char* key : {"image_id", "image_width", "image_height", "instruction", "gt_bbox"}) {
        if (!j.contains(key)) {
            throw std::invalid_argument(std::string("missing field '") + key + "'");
        }
    }
    AnnotationRecord rec;
    rec.image_id = j.at("image_id").get<std::string>();
    rec.image_width = j.at("image_width").get<double>();
    rec.image_height = j.at("image_height").get<double>();
    rec.instruction = j.at("instruction").get<std::string>();
    if (!(rec.image_width > 0.0) || !(rec.image_height > 0.0)) {
        throw std::invalid_argument("image dimensions must be positive");
    }
    rec.gt_bbox = box_from_json(j.at("gt_bbox"));
    if (!rec.gt_bbox.inside_image(rec.image_width, rec.image_height)) {
        throw std::invalid_argument("gt_bbox extends outside the image");
    }
    if (j.contains("parser_boxes")) {
        const json& boxes = j.at("parser_boxes");
        if (!boxes.is_array()) throw std::invalid_argument("parser_boxes must be an array");
        rec.parser_boxes.reserve(boxes.size());
        for (const auto& b : boxes) rec.parser_boxes.push_back(box_from_json(b));
    }
    if (j.contains("platform")) rec.platform = j.at("platform").get<std::string>();
    if (j.contains("category")) rec.category = j.at("category").get<std::string>();
    return rec;
}

} // namespace

ParseResult parse_annotations(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            result.records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            result.issues.push_back({line_no, e.what()});
        } catch (const std::invalid_argument& e) {
            result.issues.push_back({line_no, e.what()});
        }
    }
    return result;
}

ParseResult parse_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open annotations file: " + path.string());
    }
    return parse_annotations(in);
}

FilterResult iou_filter(const std::vector<AnnotationRecord>& records, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("iou_filter: threshold must be in [0,1]");
    }
    FilterResult result;
    for (const AnnotationRecord& rec : records) {
        if (rec.parser_boxes.empty()) {
            result.dropped.push_back(rec);
            ++result.no_parser_count;
            continue;
        }
        double best = 0.0;
        for (const BoundingBox& pb : rec.parser_boxes) {
            best = std::max(best, iou(rec.gt_bbox, pb));
        }
        if (best >= threshold) result.kept.push_back(rec);
        else result.dropped.push_back(rec);
    }
    return result;
}

std::string annotation_to_json_line(const AnnotationRecord& rec) {
    json j;
    j["image_id"] = rec.image_id;
    j["image_width"] = rec.image_width;
    j["image_height"] = rec.image_height;
    j["instruction"] = rec.instruction;
    j["gt_bbox"] = {rec.gt_bbox.x1, rec.gt_bbox.y1, rec.gt_bbox.x2, rec.gt_bbox.y2};
    json boxes = json::array();
    for (const BoundingBox& b : rec.parser_boxes) {
        boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    }
    j["parser_boxes"] = std::move(boxes);
    if (!rec.platform.empty()) j["platform"] = rec.platform;
    if (!rec.category.empty()) j["category"] = rec.category;
    return j.dump();
}

} // namespace v2p
