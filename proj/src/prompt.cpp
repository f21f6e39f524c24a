#include "promptcls/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "promptcls/errors.hpp"

namespace promptcls {

namespace {

constexpr const char* kTextSlot = "{text}";
constexpr const char* kMaskSlot = "{mask}";

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

TaskKind parse_task_kind(const std::string& s) {
    if (s == "binary") return TaskKind::binary;
    if (s == "multilabel") return TaskKind::multilabel;
    throw UsageError("unknown task kind '" + s + "' (expected binary or multilabel)");
}

const char* to_string(TaskKind k) {
    return k == TaskKind::binary ? "binary" : "multilabel";
}

std::vector<std::string> validate_template(const PromptTemplate& tmpl) {
    std::vector<std::string> violations;
    if (tmpl.pattern.empty()) violations.push_back("pattern is empty");
    const std::size_t texts = count_occurrences(tmpl.pattern, kTextSlot);
    const std::size_t masks = count_occurrences(tmpl.pattern, kMaskSlot);
    if (texts == 0) violations.push_back("missing {text} placeholder");
    if (texts > 1) violations.push_back("multiple {text} placeholders");
    if (masks == 0) violations.push_back("missing {mask} placeholder");
    if (masks > 1) violations.push_back("multiple {mask} placeholders");
    return violations;
}

WrappedText wrap(const std::string& text, const PromptTemplate& tmpl,
                 const std::string& mask_token, const std::string& source_id) {
    const auto violations = validate_template(tmpl);
    if (!violations.empty())
        throw UsageError("invalid template '" + tmpl.name + "': " + violations.front());
    if (text.empty()) throw DataError("cannot wrap empty text");

    const std::size_t text_pos = tmpl.pattern.find(kTextSlot);
    const std::size_t mask_pos = tmpl.pattern.find(kMaskSlot);

    WrappedText out;
    out.source_id = source_id;
    out.template_name = tmpl.name;

    // Substitute both placeholders, tracking the resulting character spans.
    std::string result;
    result.reserve(tmpl.pattern.size() + text.size() + mask_token.size());
    const bool text_first = text_pos < mask_pos;
    const std::size_t first = text_first ? text_pos : mask_pos;
    const std::size_t second = text_first ? mask_pos : text_pos;
    const std::size_t first_len = std::string(text_first ? kTextSlot : kMaskSlot).size();
    const std::string& first_sub = text_first ? text : mask_token;
    const std::string& second_sub = text_first ? mask_token : text;

    result.append(tmpl.pattern, 0, first);
    const std::size_t first_begin = result.size();
    result.append(first_sub);
    const std::size_t first_end = result.size();
    result.append(tmpl.pattern, first + first_len, second - (first + first_len));
    const std::size_t second_begin = result.size();
    result.append(second_sub);
    const std::size_t second_end = result.size();
    const std::size_t second_len = std::string(text_first ? kMaskSlot : kTextSlot).size();
    result.append(tmpl.pattern, second + second_len, std::string::npos);

    out.text = std::move(result);
    if (text_first) {
        out.body_begin = first_begin;
        out.body_end = first_end;
        out.mask_begin = second_begin;
        out.mask_end = second_end;
    } else {
        out.mask_begin = first_begin;
        out.mask_end = first_end;
        out.body_begin = second_begin;
        out.body_end = second_end;
    }
    return out;
}

std::vector<std::pair<std::string, WrappedText>> wrap_multilabel(
    const ParagraphRecord& record, const TaskPromptSet& prompts,
    const std::string& mask_token) {
    if (prompts.task_kind != TaskKind::multilabel)
        throw UsageError("wrap_multilabel requires a multilabel prompt set");
    std::vector<std::pair<std::string, WrappedText>> out;
    out.reserve(prompts.per_category.size());
    for (const auto& [category, tmpl] : prompts.per_category)
        out.emplace_back(category, wrap(record.text, tmpl, mask_token, record.id));
    return out;
}

std::vector<TemplateEntry> load_template_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("template file not found: " + path);
    std::vector<TemplateEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw DataError("template file line " + std::to_string(line_no) +
                            ": expected name<TAB>task_kind<TAB>pattern");
        TemplateEntry e;
        e.name = line.substr(0, t1);
        e.kind = parse_task_kind(line.substr(t1 + 1, t2 - t1 - 1));
        e.tmpl = {e.name, line.substr(t2 + 1)};
        const auto violations = validate_template(e.tmpl);
        if (!violations.empty())
            throw DataError("template '" + e.name + "' (line " + std::to_string(line_no) +
                            ") invalid: " + violations.front());
        entries.push_back(std::move(e));
    }
    return entries;
}

TaskPromptSet make_prompt_set(const std::vector<TemplateEntry>& entries, TaskKind kind,
                              const std::vector<std::string>& categories) {
    TaskPromptSet set;
    set.task_kind = kind;
    if (kind == TaskKind::binary) {
        std::size_t found = 0;
        for (const auto& e : entries)
            if (e.kind == TaskKind::binary) {
                set.binary_template = e.tmpl;
                ++found;
            }
        if (found != 1)
            throw DataError("binary task needs exactly one binary template, found " +
                            std::to_string(found));
        return set;
    }
    for (const auto& cat : categories) {
        const auto it = std::find_if(entries.begin(), entries.end(), [&](const TemplateEntry& e) {
            return e.kind == TaskKind::multilabel && e.name == cat;
        });
        if (it == entries.end()) throw DataError("no multilabel template for category '" + cat + "'");
        set.per_category.emplace_back(cat, it->tmpl);
    }
    for (const auto& e : entries) {
        if (e.kind != TaskKind::multilabel) continue;
        if (std::find(categories.begin(), categories.end(), e.name) == categories.end())
            throw DataError("multilabel template '" + e.name + "' matches no configured category");
    }
    return set;
}

}  // namespace promptcls
