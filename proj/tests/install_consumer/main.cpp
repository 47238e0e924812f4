#include <iostream>

#include "bizlens/metrics_store.hpp"

int main() {
  auto ds = bizlens::ingest_csv(std::string(bizlens::kCsvHeader) +
                                    "\ng500,2023,1,Acme,,Tech,Software,US,NA,100,,,,,,\n",
                                "inline");
  auto v = bizlens::lookup_metric(*ds, "Acme", bizlens::Metric::revenue, 2023);
  if (!std::holds_alternative<bizlens::MetricValue>(v)) return 1;
  std::cout << std::get<bizlens::MetricValue>(v).value << "\n";
  return 0;
}
