#include "cpirt/selection.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace cpirt {

std::vector<std::size_t> default_c_grid(std::size_t J) {
  std::vector<std::size_t> grid;
  for (std::size_t c = (J + 1) / 2; c + 1 <= J; ++c) grid.push_back(c);
  return grid;
}

namespace {

StartingValues warm_start(const FitResult& previous, const ChangePointSupport& support) {
  StartingValues start;
  start.items = previous.items;
  for (std::size_t j = support.c + 1; j <= previous.support.c; ++j) start.items.gamma[j - 1] = -1.0;
  start.structural = previous.structural;
  return start;
}

bool better(const FitResult& candidate, const FitResult& incumbent) {
  if (candidate.converged != incumbent.converged) return candidate.converged;
  return candidate.loglik > incumbent.loglik;
}

}  // namespace

SelectionReport select_c(const ResponseMatrix& data,
                         const std::optional<std::vector<std::size_t>>& c_grid,
                         const FitConfig& config, Criterion criterion) {
  const std::size_t J = data.n_items();
  std::vector<std::size_t> grid = c_grid ? *c_grid : default_c_grid(J);
  for (std::size_t c : grid) {
    if (c < 1 || c >= J)
      throw std::invalid_argument("grid value c=" + std::to_string(c) + " outside 1..J-1");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  grid.insert(grid.begin(), J);

  SelectionReport report;
  report.criterion = criterion;
  report.n_persons = data.n_persons();
  report.n_items = J;
  report.candidates.reserve(grid.size());  // keeps `previous` valid across push_back

  const FitResult* previous = nullptr;
  for (std::size_t c : grid) {
    SelectionCandidate cand;
    cand.c = c;
    cand.baseline = c == J;
    const ChangePointSupport support(c, J);
    cand.n_free_parameters = count_free_parameters(support);
    // The likelihood has several local maxima once gamma is free, so every
    // change model is fitted from both the default and the warm start and the
    // better converged optimum is kept.
    std::vector<std::function<FitResult()>> attempts{[&] { return fit(data, c, config); }};
    if (previous)
      attempts.push_back([&] { return fit(data, c, config, warm_start(*previous, support)); });
    for (const auto& attempt : attempts) {
      try {
        FitResult f = attempt();
        if (!cand.fit || better(f, *cand.fit)) cand.fit = std::move(f);
      } catch (const std::exception& e) {
        if (cand.error.empty()) cand.error = e.what();
      }
    }
    if (cand.fit) {
      cand.loglik = cand.fit->loglik;
      cand.converged = cand.fit->converged;
      cand.error.clear();
    }
    if (cand.fit) {
      cand.bic = bic_value(cand.loglik, cand.n_free_parameters, data.n_persons());
      cand.aic = aic_value(cand.loglik, cand.n_free_parameters);
    }
    report.candidates.push_back(std::move(cand));
    if (report.candidates.back().fit) previous = &*report.candidates.back().fit;
  }

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < report.candidates.size(); ++k) {
    const auto& cand = report.candidates[k];
    if (!cand.fit || !cand.converged) continue;
    const double value = criterion == Criterion::BIC ? cand.bic : cand.aic;
    if (!best) {
      best = k;
      continue;
    }
    const auto& cur = report.candidates[*best];
    const double cur_value = criterion == Criterion::BIC ? cur.bic : cur.aic;
    // Candidates arrive in descending c, so strict < keeps ties at the larger c.
    if (value < cur_value) best = k;
  }
  if (!best) throw SelectionError("no candidate model converged");
  report.chosen_index = *best;
  return report;
}

}  // namespace cpirt
