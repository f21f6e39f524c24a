#pragma once

#include <string>
#include <utility>
#include <vector>

#include "promptcls/corpus.hpp"

namespace promptcls {

// Cloze template: a pattern with exactly one `{text}` slot for the paragraph
// and exactly one `{mask}` slot for the mask token.
struct PromptTemplate {
    std::string name;
    std::string pattern;
};

enum class TaskKind { binary, multilabel };

TaskKind parse_task_kind(const std::string& s);
const char* to_string(TaskKind k);

// Binary tasks carry a single template; multilabel tasks carry one template
// per category, in category-list order.
struct TaskPromptSet {
    TaskKind task_kind = TaskKind::binary;
    PromptTemplate binary_template;
    std::vector<std::pair<std::string, PromptTemplate>> per_category;
};

// A prompted paragraph with the character spans of the mask token and of the
// embedded paragraph body (the part eligible for truncation).
struct WrappedText {
    std::string text;
    std::size_t mask_begin = 0, mask_end = 0;
    std::size_t body_begin = 0, body_end = 0;
    std::string source_id;
    std::string template_name;
};

// Empty list iff the template invariants hold.
std::vector<std::string> validate_template(const PromptTemplate& tmpl);

WrappedText wrap(const std::string& text, const PromptTemplate& tmpl,
                 const std::string& mask_token, const std::string& source_id = "");

// One WrappedText per category, each from that category's template, ordered
// as in the prompt set.
std::vector<std::pair<std::string, WrappedText>> wrap_multilabel(
    const ParagraphRecord& record, const TaskPromptSet& prompts,
    const std::string& mask_token);

// Template file: `name<TAB>task_kind<TAB>pattern` per line, # comments.
// Invalid patterns are rejected at load time.
struct TemplateEntry {
    std::string name;
    TaskKind kind;
    PromptTemplate tmpl;
};
std::vector<TemplateEntry> load_template_file(const std::string& path);

// Selects the entries for `kind`. Binary: exactly one binary entry required.
// Multilabel: entry names must exactly cover `categories`.
TaskPromptSet make_prompt_set(const std::vector<TemplateEntry>& entries, TaskKind kind,
                              const std::vector<std::string>& categories);

}  // namespace promptcls
