#include <algorithm>
#include <numeric>
#include <queue>

#include "engage/topics.hpp"
#include "parallel.hpp"

namespace engage::topics {

KnnIndex::KnnIndex(const EmbeddingTable& embeddings) : table_(embeddings) {
  const auto& ids = embeddings.post_ids();
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  id_rank_.resize(ids.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) id_rank_[order[pos]] = pos;
  row_of_rank_ = std::move(order);
}

std::vector<std::size_t> KnnIndex::query(std::size_t anchor_row, std::size_t k) const {
  const std::size_t n = table_.size();
  if (anchor_row >= n) throw ValidationError("knn: anchor row out of range");
  if (k >= n) throw ValidationError("knn: k must be < n");
  const auto& m = table_.vectors();
  const auto dim = static_cast<std::size_t>(m.cols());
  const double* anchor = m.data() + anchor_row * dim;

  // Max-heap on (distance, id rank): the top is the current worst neighbour.
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == anchor_row) continue;
    const double* row = m.data() + j * dim;
    double dist = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double t = anchor[c] - row[c];
      dist += t * t;
    }
    const Entry e{dist, id_rank_[j]};
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<std::size_t> ranks(heap.size());
  for (std::size_t i = ranks.size(); i-- > 0;) {
    ranks[i] = heap.top().second;
    heap.pop();
  }
  for (auto& r : ranks) r = row_of_rank_[r];
  return ranks;
}

std::vector<std::vector<std::size_t>> KnnIndex::query_all(std::size_t k, unsigned threads) const {
  std::vector<std::vector<std::size_t>> out(table_.size());
  detail::parallel_for(table_.size(), threads, [&](std::size_t i) { out[i] = query(i, k); });
  return out;
}

std::vector<std::string> knn(const EmbeddingTable& embeddings, std::string_view anchor,
                             std::size_t k) {
  const auto row = embeddings.find(anchor);
  if (!row) throw ValidationError("knn: unknown anchor '" + std::string(anchor) + "'");
  const KnnIndex index(embeddings);
  std::vector<std::string> out;
  for (auto r : index.query(*row, k)) out.push_back(embeddings.post_ids()[r]);
  return out;
}

}  // namespace engage::topics
