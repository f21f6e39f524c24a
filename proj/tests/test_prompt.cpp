#include <doctest.h>

#include <string>
#include <vector>

#include "promptcls/errors.hpp"
#include "promptcls/prompt.hpp"
#include "support.hpp"

using namespace promptcls;
using testsupport::TempDir;
using testsupport::write_file;

namespace {
const std::string kMask = "[MASK]";
const std::string kBinaryPattern = "{text} Is it patronizing or condescending? {mask}";
}  // namespace

TEST_CASE("validate_template accepts the canonical pattern") {
    CHECK(validate_template({"q", kBinaryPattern}).empty());
    CHECK(validate_template({"m", "{mask} {text}"}).empty());
}

TEST_CASE("validate_template reports each violation") {
    CHECK(!validate_template({"t", "{text}"}).empty());
    CHECK(!validate_template({"t", "{mask}"}).empty());
    CHECK(!validate_template({"t", "{text} {mask} {mask}"}).empty());
    CHECK(!validate_template({"t", "{text} {text} {mask}"}).empty());
    CHECK(!validate_template({"t", ""}).empty());
}

TEST_CASE("wrap substitutes both placeholders") {
    const std::string text =
        "People ordered pizzas to be delivered , with the ample leftovers donated to local "
        "homeless shelters.";
    auto w = wrap(text, {"q", kBinaryPattern}, kMask, "p1");
    CHECK(w.text == text + " Is it patronizing or condescending? " + kMask);
    CHECK(w.source_id == "p1");
    CHECK(w.template_name == "q");
    CHECK(w.text.substr(w.mask_begin, w.mask_end - w.mask_begin) == kMask);
    CHECK(w.text.substr(w.body_begin, w.body_end - w.body_begin) == text);
}

TEST_CASE("wrap handles a leading mask") {
    auto w = wrap("a", {"m", "{mask} {text}"}, kMask);
    CHECK(w.text == "[MASK] a");
    CHECK(w.mask_begin == 0);
    CHECK(w.mask_end == kMask.size());
    CHECK(w.text.substr(w.body_begin, w.body_end - w.body_begin) == "a");
}

TEST_CASE("wrap output contains exactly one mask occurrence") {
    auto w = wrap("some plain paragraph", {"q", kBinaryPattern}, kMask);
    std::size_t count = 0;
    for (std::size_t pos = w.text.find(kMask); pos != std::string::npos;
         pos = w.text.find(kMask, pos + 1))
        ++count;
    CHECK(count == 1);
}

TEST_CASE("wrap length law") {
    const PromptTemplate tmpl{"q", kBinaryPattern};
    for (const std::string text : {"x", "two words", "a somewhat longer paragraph here"}) {
        auto w = wrap(text, tmpl, kMask);
        CHECK(w.text.size() ==
              tmpl.pattern.size() - 6 - 6 + text.size() + kMask.size());
    }
}

TEST_CASE("wrap rejects bad input") {
    CHECK_THROWS_AS(wrap("", {"q", kBinaryPattern}, kMask), DataError);
    CHECK_THROWS_AS(wrap("text", {"t", "{text} no mask"}, kMask), UsageError);
}

TEST_CASE("wrap_multilabel yields one entry per category in order") {
    TaskPromptSet ps;
    ps.task_kind = TaskKind::multilabel;
    for (const std::string cat : {"one", "two", "three", "four", "five", "six", "seven"})
        ps.per_category.push_back({cat, {cat, "{text} Is it about " + cat + "? {mask}"}});

    ParagraphRecord rec{"r9", "the paragraph body", std::nullopt, {}};
    auto wrapped = wrap_multilabel(rec, ps, kMask);
    REQUIRE(wrapped.size() == 7);
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
        CHECK(wrapped[i].first == ps.per_category[i].first);
        CHECK(wrapped[i].second.source_id == "r9");
        CHECK(wrapped[i].second.text.find("the paragraph body") != std::string::npos);
    }

    TaskPromptSet single;
    single.task_kind = TaskKind::multilabel;
    single.per_category.push_back({"only", {"only", "{text} {mask}"}});
    CHECK(wrap_multilabel(rec, single, kMask).size() == 1);
}

TEST_CASE("wrap_multilabel rejects a binary prompt set") {
    TaskPromptSet ps;
    ps.task_kind = TaskKind::binary;
    ps.binary_template = {"q", kBinaryPattern};
    ParagraphRecord rec{"r", "text", std::nullopt, {}};
    CHECK_THROWS_AS(wrap_multilabel(rec, ps, kMask), UsageError);
}

TEST_CASE("template file loads entries and skips comments") {
    TempDir tmp;
    write_file(tmp.file("t.tsv"),
               "# name\ttask\tpattern\n"
               "q\tbinary\t{text} Is it so? {mask}\n"
               "alpha\tmultilabel\t{text} Is it alpha? {mask}\n"
               "\n"
               "beta\tmultilabel\t{text} Is it beta? {mask}\n");
    auto entries = load_template_file(tmp.file("t.tsv"));
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].name == "q");
    CHECK(entries[0].kind == TaskKind::binary);
    CHECK(entries[1].kind == TaskKind::multilabel);
    CHECK(entries[2].tmpl.pattern == "{text} Is it beta? {mask}");
}

TEST_CASE("template file rejects invalid patterns and task kinds") {
    TempDir tmp;
    write_file(tmp.file("bad1.tsv"), "q\tbinary\t{text} missing mask\n");
    CHECK_THROWS_AS(load_template_file(tmp.file("bad1.tsv")), DataError);
    write_file(tmp.file("bad2.tsv"), "q\tsideways\t{text} {mask}\n");
    CHECK_THROWS_AS(load_template_file(tmp.file("bad2.tsv")), UsageError);
    write_file(tmp.file("bad3.tsv"), "only two fields\n");
    CHECK_THROWS_AS(load_template_file(tmp.file("bad3.tsv")), DataError);
    CHECK_THROWS_AS(load_template_file(tmp.file("absent.tsv")), DataError);
}

TEST_CASE("make_prompt_set selects by task kind") {
    std::vector<TemplateEntry> entries = {
        {"q", TaskKind::binary, {"q", "{text} binary? {mask}"}},
        {"alpha", TaskKind::multilabel, {"alpha", "{text} alpha? {mask}"}},
        {"beta", TaskKind::multilabel, {"beta", "{text} beta? {mask}"}},
    };

    auto bin = make_prompt_set(entries, TaskKind::binary, {});
    CHECK(bin.task_kind == TaskKind::binary);
    CHECK(bin.binary_template.name == "q");

    auto ml = make_prompt_set(entries, TaskKind::multilabel, {"alpha", "beta"});
    REQUIRE(ml.per_category.size() == 2);
    CHECK(ml.per_category[0].first == "alpha");
    CHECK(ml.per_category[1].first == "beta");
}

TEST_CASE("make_prompt_set enforces exact coverage") {
    std::vector<TemplateEntry> entries = {
        {"alpha", TaskKind::multilabel, {"alpha", "{text} alpha? {mask}"}},
    };
    CHECK_THROWS_AS(make_prompt_set(entries, TaskKind::binary, {}), DataError);
    CHECK_THROWS_AS(make_prompt_set(entries, TaskKind::multilabel, {"alpha", "beta"}), DataError);

    std::vector<TemplateEntry> extra = {
        {"alpha", TaskKind::multilabel, {"alpha", "{text} alpha? {mask}"}},
        {"ghost", TaskKind::multilabel, {"ghost", "{text} ghost? {mask}"}},
    };
    CHECK_THROWS_AS(make_prompt_set(extra, TaskKind::multilabel, {"alpha"}), DataError);
}

TEST_CASE("parse_task_kind round-trips") {
    CHECK(parse_task_kind("binary") == TaskKind::binary);
    CHECK(parse_task_kind("multilabel") == TaskKind::multilabel);
    CHECK_THROWS_AS(parse_task_kind("other"), UsageError);
    CHECK(std::string(to_string(TaskKind::binary)) == "binary");
    CHECK(std::string(to_string(TaskKind::multilabel)) == "multilabel");
}
