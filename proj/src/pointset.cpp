// SPDX-License-Identifier: Apache-2.0

#include "rbc/pointset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace rbc
{

namespace
{

// Coordinate key at ~9e-13 absolute resolution; nested nodes coincide to
// machine precision and land in the same bucket.
std::vector<std::int64_t> quantize(const Eigen::VectorXd &x)
{
  std::vector<std::int64_t> key(x.size());
  for (Eigen::Index i = 0; i < x.size(); i++)
  {
    key[i] = llround(std::ldexp(x[i], 40));
  }
  return key;
}

struct KeyHash
{
  std::size_t operator()(const std::vector<std::int64_t> &key) const
  {
    std::size_t h = 1469598103934665603ull;
    for (std::int64_t v : key)
    {
      h ^= static_cast<std::size_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

class PointMerger
{
public:
  explicit PointMerger(PointSet &set) : set_(set) {}

  void add(const Eigen::VectorXd &x, double w, const std::string &label)
  {
    auto key = quantize(x);
    auto [it, inserted] = index_.try_emplace(std::move(key), set_.size());
    if (inserted)
    {
      set_.points.push_back(x);
      set_.weights.push_back(w);
      set_.labels.push_back(label);
    }
    else
    {
      set_.weights[it->second] += w;
    }
  }

private:
  PointSet &set_;
  std::unordered_map<std::vector<std::int64_t>, int, KeyHash> index_;
};

std::uint64_t binomial(int n, int k)
{
  if (k < 0 || k > n)
  {
    return 0;
  }
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (int i = 1; i <= k; i++)
  {
    c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return c;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b)
{
  if (b != 0 && a > UINT64_MAX / b)
  {
    throw std::overflow_error("count_points: value exceeds 64 bits");
  }
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b)
{
  if (a > UINT64_MAX - b)
  {
    throw std::overflow_error("count_points: value exceeds 64 bits");
  }
  return a + b;
}

std::uint64_t ipow(std::uint64_t base, int exp)
{
  std::uint64_t r = 1;
  for (int i = 0; i < exp; i++)
  {
    r = checked_mul(r, base);
  }
  return r;
}

// Compositions of |i| = total into dim parts >= 1, emitted with the leading
// coordinate taking larger values first so varying xi_1 comes before xi_2.
void for_each_composition(int remaining, int dim, std::vector<int> &idx,
                          const std::function<void(const std::vector<int> &)> &fn, int pos = 0)
{
  if (pos == dim - 1)
  {
    idx[pos] = remaining;
    fn(idx);
    return;
  }
  for (int v = remaining - (dim - 1 - pos); v >= 1; v--)
  {
    idx[pos] = v;
    for_each_composition(remaining - v, dim, idx, fn, pos + 1);
  }
}

std::string multi_index_label(const std::vector<int> &idx)
{
  std::string s = "i=(";
  for (std::size_t k = 0; k < idx.size(); k++)
  {
    s += std::to_string(idx[k]);
    s += (k + 1 < idx.size()) ? "," : ")";
  }
  return s;
}

} // namespace

double PointSet::weight_sum() const
{
  double s = 0.0;
  for (double w : weights)
  {
    s += w;
  }
  return s;
}

std::string direction_set_label(const std::vector<int> &K)
{
  if (K.empty())
  {
    return "K={}";
  }
  std::string s = "K={";
  for (std::size_t k = 0; k < K.size(); k++)
  {
    s += std::to_string(K[k]);
    s += (k + 1 < K.size()) ? "," : "}";
  }
  return s;
}

PointSet sparse_grid(int dim, int level, RuleFamily family, const ParamBox &box)
{
  if (dim != box.dim())
  {
    throw std::invalid_argument("sparse_grid: dimension does not match box");
  }
  if (level < 0)
  {
    throw std::invalid_argument("sparse_grid: level must be nonnegative");
  }

  PointSet set;
  set.dim = dim;
  PointMerger merger(set);

  std::vector<int> idx(dim);
  for (int total = std::max(level + 1, dim); total <= level + dim; total++)
  {
    const int defect = level + dim - total;
    const double comb = ((defect % 2 == 0) ? 1.0 : -1.0) *
                        static_cast<double>(binomial(dim - 1, defect));
    for_each_composition(total, dim, idx, [&](const std::vector<int> &i) {
      std::vector<Rule1D> rules;
      rules.reserve(dim);
      std::uint64_t count = 1;
      for (int m = 0; m < dim; m++)
      {
        rules.push_back(make_rule(family, rule_size_for_index(family, i[m]), box.lo[m], box.hi[m]));
        count *= static_cast<std::uint64_t>(rules.back().size());
      }
      const std::string label = multi_index_label(i);
      Eigen::VectorXd x(dim);
      std::vector<int> k(dim, 0);
      for (std::uint64_t flat = 0; flat < count; flat++)
      {
        double w = comb;
        for (int m = 0; m < dim; m++)
        {
          x[m] = rules[m].nodes[k[m]];
          w *= rules[m].weights[k[m]];
        }
        merger.add(x, w, label);
        for (int m = dim - 1; m >= 0; m--)
        {
          if (++k[m] < rules[m].size())
          {
            break;
          }
          k[m] = 0;
        }
      }
    });
  }

  if (std::abs(set.weight_sum() - 1.0) > 1e-10)
  {
    throw std::logic_error("sparse_grid: combination weights do not sum to 1");
  }
  return set;
}

PointSet anova_points(const std::vector<int> &K, const std::vector<int> &orders,
                      const Eigen::VectorXd &anchor, const ParamBox &box, RuleFamily family)
{
  if (anchor.size() != box.dim())
  {
    throw std::invalid_argument("anova_points: anchor dimension mismatch");
  }
  if (K.size() != orders.size())
  {
    throw std::invalid_argument("anova_points: one order per direction required");
  }

  PointSet set;
  set.dim = box.dim();
  const std::string label = direction_set_label(K);

  if (K.empty())
  {
    set.points.push_back(anchor);
    set.weights.push_back(1.0);
    set.labels.push_back(label);
    return set;
  }

  std::vector<Rule1D> rules;
  std::uint64_t count = 1;
  for (std::size_t j = 0; j < K.size(); j++)
  {
    const int m = K[j] - 1;
    if (m < 0 || m >= box.dim())
    {
      throw std::invalid_argument("anova_points: direction out of range");
    }
    if (orders[j] < 1)
    {
      throw std::invalid_argument("anova_points: orders must be positive");
    }
    rules.push_back(make_rule(family, orders[j], box.lo[m], box.hi[m]));
    count *= static_cast<std::uint64_t>(orders[j]);
  }

  Eigen::VectorXd x = anchor;
  std::vector<int> k(K.size(), 0);
  for (std::uint64_t flat = 0; flat < count; flat++)
  {
    double w = 1.0;
    for (std::size_t j = 0; j < K.size(); j++)
    {
      x[K[j] - 1] = rules[j].nodes[k[j]];
      w *= rules[j].weights[k[j]];
    }
    set.points.push_back(x);
    set.weights.push_back(w);
    set.labels.push_back(label);
    for (int j = static_cast<int>(K.size()) - 1; j >= 0; j--)
    {
      if (++k[j] < rules[j].size())
      {
        break;
      }
      k[j] = 0;
    }
  }
  return set;
}

std::uint64_t count_points(int dim, int level, int p)
{
  if (dim < 1 || level < 0 || p < 1)
  {
    throw std::invalid_argument("count_points: need dim >= 1, level >= 0, p >= 1");
  }
  std::uint64_t total = 0;
  for (int l = 0; l <= std::min(level, dim); l++)
  {
    total = checked_add(total, checked_mul(binomial(dim, l), ipow(p, l)));
  }
  return total;
}

std::uint64_t count_points_fresh(int dim, int level, int p)
{
  if (dim < 1 || level < 0 || p < 2)
  {
    throw std::invalid_argument("count_points_fresh: need dim >= 1, level >= 0, p >= 2");
  }
  std::uint64_t total = 0;
  for (int l = 1; l <= std::min(level, dim); l++)
  {
    total = checked_add(total, checked_mul(binomial(dim, l), ipow(p - 1, l)));
  }
  return total;
}

std::vector<Eigen::VectorXd> halton(int dim, int count, const ParamBox &box)
{
  if (dim != box.dim())
  {
    throw std::invalid_argument("halton: dimension does not match box");
  }
  if (count < 1)
  {
    throw std::invalid_argument("halton: count must be positive");
  }

  // First dim primes as bases.
  std::vector<int> bases;
  for (int c = 2; static_cast<int>(bases.size()) < dim; c++)
  {
    bool prime = true;
    for (int d = 2; d * d <= c; d++)
    {
      if (c % d == 0)
      {
        prime = false;
        break;
      }
    }
    if (prime)
    {
      bases.push_back(c);
    }
  }

  std::vector<Eigen::VectorXd> pts(count, Eigen::VectorXd(dim));
  for (int i = 0; i < count; i++)
  {
    for (int m = 0; m < dim; m++)
    {
      // Radical inverse of index i+1 in base bases[m].
      double inv = 0.0, scale = 1.0 / bases[m];
      for (int k = i + 1; k > 0; k /= bases[m])
      {
        inv += (k % bases[m]) * scale;
        scale /= bases[m];
      }
      pts[i][m] = box.lo[m] + inv * (box.hi[m] - box.lo[m]);
    }
  }
  return pts;
}

void write_points_csv(const PointSet &set, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  for (int m = 0; m < set.dim; m++)
  {
    out << "xi" << m + 1 << ",";
  }
  out << "weight\n";
  char buf[48];
  for (int i = 0; i < set.size(); i++)
  {
    for (int m = 0; m < set.dim; m++)
    {
      std::snprintf(buf, sizeof(buf), "%.16e,", set.points[i][m]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.16e\n", set.weights[i]);
    out << buf;
  }
}

} // namespace rbc
