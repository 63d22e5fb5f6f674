//! Minimum-cost purchase of on-demand capacity covering a residual demand.
//!
//! Offers are grouped into classes of identical (capacity, cost); within a
//! class the lowest ids are always taken first, which is the preferred
//! bit-vector among equal-count choices. Identical offers reduce to a
//! closed form; mixed classes are searched depth-first with a
//! fractional-rate bound.

use crate::formulation::OfferClass;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverChoice {
    pub cost: u128,
    /// Units taken from each class, parallel to the class list.
    pub counts: Vec<usize>,
}

impl CoverChoice {
    pub fn units(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Expands class counts into the per-offer bit-vector.
    pub fn bits(&self, classes: &[OfferClass], num_offers: usize) -> Vec<bool> {
        let mut bits = vec![false; num_offers];
        for (class, &count) in classes.iter().zip(&self.counts) {
            for &r in &class.members[..count] {
                bits[r] = true;
            }
        }
        bits
    }
}

fn div_ceil(a: u128, b: u128) -> u128 {
    a / b + u128::from(!a.is_multiple_of(b))
}

/// Cheapest way to buy at least `residual` capacity, ties resolved towards
/// the preferred (lowest-id) offer vector. `None` if the offers cannot
/// cover it.
pub fn cheapest_cover(classes: &[OfferClass], residual: u128) -> Option<CoverChoice> {
    let mut counts = vec![0usize; classes.len()];
    let mut covered = 0u128;
    // free capacity is always taken in full
    for (c, class) in classes.iter().enumerate() {
        if class.cost == 0 {
            counts[c] = class.members.len();
            covered += class.capacity * class.members.len() as u128;
        }
    }
    let residual = residual.saturating_sub(covered);
    let paid: Vec<usize> = (0..classes.len())
        .filter(|&c| classes[c].cost > 0 && classes[c].capacity > 0)
        .collect();
    if residual == 0 {
        return Some(CoverChoice { cost: 0, counts });
    }
    match paid.len() {
        0 => None,
        1 => {
            let c = paid[0];
            let class = &classes[c];
            let need = div_ceil(residual, class.capacity);
            if need > class.members.len() as u128 {
                return None;
            }
            counts[c] = need as usize;
            Some(CoverChoice {
                cost: need * class.cost as u128,
                counts,
            })
        }
        _ => {
            let mut order = paid;
            // cheapest rate first; cost/cap compared by cross-multiplication
            order.sort_by(|&a, &b| {
                let (ca, cb) = (&classes[a], &classes[b]);
                (ca.cost as u128 * cb.capacity)
                    .cmp(&(cb.cost as u128 * ca.capacity))
                    .then(a.cmp(&b))
            });
            let mut suffix_capacity = vec![0u128; order.len() + 1];
            for i in (0..order.len()).rev() {
                let cl = &classes[order[i]];
                suffix_capacity[i] =
                    suffix_capacity[i + 1] + cl.capacity * cl.members.len() as u128;
            }
            if suffix_capacity[0] < residual {
                return None;
            }
            let mut search = Search {
                classes,
                order: &order,
                suffix_capacity: &suffix_capacity,
                counts: counts.clone(),
                best: None,
            };
            search.descend(0, residual, 0);
            search.best
        }
    }
}

struct Search<'a> {
    classes: &'a [OfferClass],
    order: &'a [usize],
    suffix_capacity: &'a [u128],
    counts: Vec<usize>,
    best: Option<CoverChoice>,
}

impl Search<'_> {
    fn offer(&mut self, cost: u128) {
        let better = match &self.best {
            None => true,
            Some(b) => cost < b.cost || (cost == b.cost && self.preferred_over(&b.counts)),
        };
        if better {
            self.best = Some(CoverChoice {
                cost,
                counts: self.counts.clone(),
            });
        }
    }

    fn preferred_over(&self, other: &[usize]) -> bool {
        let total: usize = self.classes.iter().map(|c| c.members.len()).sum();
        let as_bits = |counts: &[usize]| {
            CoverChoice {
                cost: 0,
                counts: counts.to_vec(),
            }
            .bits(self.classes, total)
        };
        crate::model::prefer_bits(&as_bits(&self.counts), &as_bits(other))
    }

    fn descend(&mut self, depth: usize, residual: u128, cost: u128) {
        if residual == 0 {
            self.offer(cost);
            return;
        }
        if depth == self.order.len() || self.suffix_capacity[depth] < residual {
            return;
        }
        let c = self.order[depth];
        let class = &self.classes[c];
        // rate bound: nothing left is cheaper per unit than this class
        let bound = (residual.checked_mul(class.cost as u128))
            .map(|x| cost + div_ceil(x, class.capacity))
            .unwrap_or(cost);
        if let Some(best) = &self.best {
            if bound > best.cost {
                return;
            }
        }
        let max_take = div_ceil(residual, class.capacity).min(class.members.len() as u128) as usize;
        for take in (0..=max_take).rev() {
            let added = take as u128 * class.capacity;
            self.counts[c] = take;
            self.descend(
                depth + 1,
                residual.saturating_sub(added),
                cost + take as u128 * class.cost as u128,
            );
        }
        self.counts[c] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(spec: &[(u128, u64, usize)]) -> Vec<OfferClass> {
        let mut next = 0;
        spec.iter()
            .map(|&(capacity, cost, n)| {
                let members = (next..next + n).collect();
                next += n;
                OfferClass {
                    capacity,
                    cost,
                    members,
                }
            })
            .collect()
    }

    /// Every subset of offers, cheapest first then preferred bit-vector.
    fn brute(offers: &[(u128, u64)], residual: u128) -> Option<(u128, Vec<bool>)> {
        let r = offers.len();
        let mut best: Option<(u128, Vec<bool>)> = None;
        for mask in 0u64..(1 << r) {
            let bits: Vec<bool> = (0..r).map(|i| mask >> i & 1 == 1).collect();
            let cap: u128 = (0..r).filter(|&i| bits[i]).map(|i| offers[i].0).sum();
            if cap < residual {
                continue;
            }
            let cost: u128 = (0..r)
                .filter(|&i| bits[i])
                .map(|i| offers[i].1 as u128)
                .sum();
            let take = match &best {
                None => true,
                Some((bc, bb)) => {
                    cost < *bc || (cost == *bc && crate::model::prefer_bits(&bits, bb))
                }
            };
            if take {
                best = Some((cost, bits));
            }
        }
        best
    }

    #[test]
    fn homogeneous_prefix() {
        let cl = classes(&[(127, 25000, 32)]);
        let pick = cheapest_cover(&cl, 1024).unwrap();
        assert_eq!(pick.cost, 225000);
        assert_eq!(pick.units(), 9);
        let bits = pick.bits(&cl, 32);
        assert!(bits[..9].iter().all(|&b| b) && bits[9..].iter().all(|&b| !b));
        assert_eq!(cheapest_cover(&cl, 0).unwrap().cost, 0);
        assert_eq!(cheapest_cover(&cl, 778).unwrap().units(), 7);
        assert!(cheapest_cover(&cl, 127 * 32 + 1).is_none());
        assert!(cheapest_cover(&[], 1).is_none());
    }

    #[test]
    fn mixed_classes_match_brute_force() {
        let offers = [
            (5u128, 7u64),
            (3, 4),
            (5, 7),
            (8, 12),
            (1, 1),
            (3, 4),
            (0, 3),
            (2, 0),
        ];
        // build classes in id order as the compiler does
        let mut cls: Vec<OfferClass> = Vec::new();
        for (r, &(cap, cost)) in offers.iter().enumerate() {
            match cls.iter_mut().find(|c| c.capacity == cap && c.cost == cost) {
                Some(c) => c.members.push(r),
                None => cls.push(OfferClass {
                    capacity: cap,
                    cost,
                    members: vec![r],
                }),
            }
        }
        for residual in 0..=30u128 {
            let fast = cheapest_cover(&cls, residual).map(|c| (c.cost, c.bits(&cls, offers.len())));
            assert_eq!(fast, brute(&offers, residual), "residual {residual}");
        }
    }
}
