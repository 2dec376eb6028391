#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uirepair/dom_snapshot.h"
#include "uirepair/llm_bridge.h"

namespace testsupport {

struct SyntheticCorpus {
  std::filesystem::path manifest;
  std::filesystem::path mockScript;
  std::size_t cases = 0;
};

namespace detail {

inline std::string synthetic_page(const std::string& app, std::size_t items, bool updated) {
  std::string html = "<html>\n<head><title>" + app + "</title></head>\n<body>\n<div id=\"main\">\n";
  if (updated) html += "<div class=\"wrapper\">\n";
  html += "<form method=\"post\">\n";
  for (std::size_t i = 1; i <= items; ++i) {
    const std::string n = std::to_string(i);
    const std::string field = (updated ? "f_" : "field_") + n;
    html += " <div class=\"row\"><label>" + app + " label " + n + "</label><input type=\"text\" name=\"" + field +
            "\" value=\"" + app + "-" + n + "\"><a href=\"#item" + n + "\">" + app + " link " + n + "</a></div>\n";
  }
  html += "</form>\n";
  if (updated) html += "</div>\n";
  html += "</div>\n</body>\n</html>\n";
  return html;
}

inline std::string answer(std::int64_t id, const std::string& attributes) {
  return "The most similar element's numericId: " + std::to_string(id) +
         ". Because they share the most similar attributes: " + attributes + ".";
}

}  // namespace detail

// Five applications with one old/new page pair each; the new version wraps
// the form in an extra div and renames the input fields. Every case has a
// scripted mock conversation; some select a wrong element first, some get a
// malformed answer, some disagree across runs.
inline SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, std::size_t cases = 62) {
  using nlohmann::json;
  using namespace uirepair;
  const std::vector<std::string> apps = {"AddressBook", "Claroline", "Collabtive", "MantisBT", "MRBS"};
  const std::size_t per_app = (cases + apps.size() - 1) / apps.size();
  std::filesystem::create_directories(dir);

  json rules = json::array();
  std::string manifest;
  std::size_t written = 0;
  for (const auto& app : apps) {
    const std::string old_html = detail::synthetic_page(app, per_app, false);
    const std::string new_html = detail::synthetic_page(app, per_app, true);
    write_text_file(dir / (app + "-old.html"), old_html);
    write_text_file(dir / (app + "-new.html"), new_html);
    const PageSnapshot old_page = parse_page(old_html, app + "-old");
    const PageSnapshot new_page = parse_page(new_html, app + "-new");

    for (std::size_t i = 1; i <= per_app && written < cases; ++i, ++written) {
      const std::string row = "/div[" + std::to_string(i) + "]";
      const bool link = written % 3 == 2;
      const std::string leaf = link ? "/a[1]" : "/input[1]";
      const std::string old_xpath = "/html[1]/body[1]/div[1]/form[1]" + row + leaf;
      const std::string gt_xpath = "/html[1]/body[1]/div[1]/div[1]/form[1]" + row + leaf;
      const WebElementRecord* target = old_page.find_by_xpath(old_xpath);
      const WebElementRecord* gt = new_page.find_by_xpath(gt_xpath);
      const std::size_t other_row = i == 1 ? 2 : i - 1;
      const WebElementRecord* other = new_page.find_by_xpath("/html[1]/body[1]/div[1]/div[1]/form[1]/div[" +
                                                             std::to_string(other_row) + "]" + leaf);

      std::string statement;
      if (link) {
        statement = "assertEquals(\"" + app + " link " + std::to_string(i) + "\", driver.findElement(By.xpath(\"" +
                    old_xpath + "\")).getText());";
      } else {
        statement = "driver.findElement(By.name(\"field_" + std::to_string(i) + "\")).sendKeys(\"value " +
                    std::to_string(i) + "\");";
      }
      json entry = {{"id", app + "-" + std::to_string(i)},
                    {"app", app},
                    {"old", app + "-old.html"},
                    {"new", app + "-new.html"},
                    {"target_xpath", old_xpath},
                    {"statement", statement},
                    {"matcher", written % 2 == 0 ? "edit-distance" : "water"},
                    {"gt_xpath", gt_xpath}};
      manifest += entry.dump() + "\n";

      const std::string target_text = serialize_element(*target);
      const std::string good = detail::answer(gt->numericId, "xpath, text");
      json responses;
      if (written % 11 == 5) {
        responses = json::array({"I could not decide which element matches."});
      } else if (written % 5 == 3) {
        responses = json::array({detail::answer(other->numericId, "xpath, text")});
      } else if (written % 7 == 4) {
        responses = json::array({good, good, detail::answer(other->numericId, "xpath"), good});
      } else {
        responses = json::array({good});
      }
      rules.push_back({{"contains", json::array({"This is a previous prompt", "Target element: <" + target_text + ">"})},
                       {"responses", json::array({good})}});
      rules.push_back({{"contains", json::array({"Target element: <" + target_text + ">"})}, {"responses", responses}});

      for (const WebElementRecord* chosen : {gt, other}) {
        std::string repaired = statement;
        const std::size_t open = repaired.find("By.");
        const std::size_t close = repaired.find("\")", open);
        repaired.replace(open, close + 1 - open, "By.xpath(\"" + chosen->xpath + "\"");
        rules.push_back(
            {{"contains", json::array({"you chose the element <" + serialize_element(*chosen) + ">",
                                       "Broken statement: <" + statement + ">"})},
             {"responses", json::array({"Here is the repaired statement:\n```java\n" + repaired + "\n```"})}});
      }
    }
  }
  json script = {{"rules", rules}, {"default", "Sorry, I cannot answer that."}};
  SyntheticCorpus corpus;
  corpus.manifest = dir / "manifest.jsonl";
  corpus.mockScript = dir / "mock.json";
  corpus.cases = written;
  write_text_file(corpus.manifest, manifest);
  write_text_file(corpus.mockScript, script.dump(1));
  return corpus;
}

}  // namespace testsupport
