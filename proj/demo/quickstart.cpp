// One ad through the dictionary matcher, wage grammar, title hierarchy and firm
// standardization, using the sample data.

#include <iostream>

#include "jobtext/jobtext.hpp"

using namespace jobtext;

int main() {
  const std::string data = JOBTEXT_DATA_DIR;
  const std::string title = "Senior Warehouse Manager";
  const std::string employer = "Wal-Mart Stores, Inc.";
  const std::string body =
      "Lead a team of 12 in our distribution center. Union apprenticeship training available. "
      "Pay is $24.50 - $28.00 per hour. Dental and vision insurance.";

  auto benefits = load_dictionary(data + "/dictionaries/benefits.csv", DictionarySchema::benefits);
  auto union_dict = load_dictionary(data + "/dictionaries/labor_union.csv", DictionarySchema::generic);
  auto union_rules = load_rules(data + "/dictionaries/labor_union_rules.csv");
  const std::vector<Matcher> matchers = {Matcher::compile(benefits.entries),
                                         Matcher::compile(union_dict.entries, union_rules)};
  for (auto& m : matchers)
    for (auto& h : m.scan(body)) std::cout << "hit   " << h.uci << " tokens [" << h.start_token << "," << h.end_token << ")\n";

  JobAdRecord ad;
  ad.id = "demo-1";
  ad.title = title;
  ad.body = body;
  if (auto w = extract_wage(ad).wage)
    std::cout << "wage  " << w->raw_span_min.value_or("") << " to " << w->raw_span_max.value_or("") << " "
              << frequency_name(w->frequency) << ", annualized " << w->annualized << "\n";

  HierarchyMaps maps(HierarchyMaps::load_terms(data + "/titles/hierarchy_base.csv"),
                     HierarchyMaps::load_terms(data + "/titles/hierarchy_stepper.csv"));
  std::cout << "title " << title << " -> hierarchy " << hierarchy(title, maps) << "\n";
  std::cout << "firm  " << employer << " -> " << standardize(employer) << "\n";
}
