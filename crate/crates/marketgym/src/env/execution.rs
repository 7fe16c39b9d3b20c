//! Order execution against close prices with fees and a bid-ask spread.
//!
//! Shared by the trading environment and the baseline strategies so that both
//! face identical frictions.

use serde::{Deserialize, Serialize};

use super::EnvError;

/// Trading frictions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// Currency charged per executed (non-zero) trade in one asset.
    pub flat_fee: f64,
    /// Fraction of traded notional charged as commission.
    pub per_share_rate: f64,
    /// Currency per share added to buys and subtracted from sells.
    pub half_spread: f64,
}

impl CostModel {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [
            ("flat_fee", self.flat_fee),
            ("per_share_rate", self.per_share_rate),
            ("half_spread", self.half_spread),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(EnvError::InvalidConfig(format!("cost field {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Cash plus integer long-only share holdings.
#[derive(Debug, Clone, PartialEq)]
pub struct Book {
    pub balance: f64,
    pub holdings: Vec<u64>,
}

impl Book {
    pub fn new(balance: f64, n_assets: usize) -> Self {
        Self { balance, holdings: vec![0; n_assets] }
    }

    /// Cash plus holdings marked at `prices`.
    pub fn value(&self, prices: &[f64]) -> f64 {
        self.balance
            + self
                .holdings
                .iter()
                .zip(prices)
                .map(|(h, p)| *h as f64 * p)
                .sum::<f64>()
    }
}

/// Outcome of one batch of orders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fill {
    /// Signed shares actually traded per asset.
    pub executed: Vec<i64>,
    /// Flat fees plus proportional commission.
    pub fees: f64,
    /// Value lost to the spread relative to the close.
    pub spread_cost: f64,
}

/// Executes signed share `orders` at `prices`.
///
/// Sells go first (clipped to holdings) so their proceeds can fund buys.
/// Buys are then filled asset by asset in `order`, each clipped to the cash
/// available so the balance never goes negative.
pub fn execute(book: &mut Book, orders: &[i64], prices: &[f64], costs: &CostModel, order: &[usize]) -> Fill {
    let n = book.holdings.len();
    debug_assert_eq!(orders.len(), n);
    debug_assert_eq!(prices.len(), n);
    let mut fill = Fill { executed: vec![0; n], ..Fill::default() };

    for &i in order {
        if orders[i] >= 0 {
            continue;
        }
        let qty = orders[i].unsigned_abs().min(book.holdings[i]);
        if qty == 0 {
            continue;
        }
        let price = (prices[i] - costs.half_spread).max(0.0);
        let gross = qty as f64 * price;
        let fee = costs.flat_fee + costs.per_share_rate * gross;
        let net = gross - fee;
        if book.balance + net < 0.0 {
            // Fees exceed what the sale and the cash on hand can cover.
            continue;
        }
        book.balance += net;
        book.holdings[i] -= qty;
        fill.executed[i] = -(qty as i64);
        fill.fees += fee;
        fill.spread_cost += qty as f64 * (prices[i] - price);
    }

    for &i in order {
        if orders[i] <= 0 {
            continue;
        }
        let price = prices[i] + costs.half_spread;
        let unit = price * (1.0 + costs.per_share_rate);
        let budget = book.balance - costs.flat_fee;
        if budget <= 0.0 || unit <= 0.0 {
            continue;
        }
        let affordable = (budget / unit).floor();
        let mut qty = (orders[i] as u64).min(if affordable >= u64::MAX as f64 { u64::MAX } else { affordable as u64 });
        let cost_of = |q: u64| {
            let gross = q as f64 * price;
            gross + costs.flat_fee + costs.per_share_rate * gross
        };
        while qty > 0 && cost_of(qty) > book.balance {
            qty -= 1;
        }
        if qty == 0 {
            continue;
        }
        let gross = qty as f64 * price;
        let fee = costs.flat_fee + costs.per_share_rate * gross;
        book.balance -= gross + fee;
        book.holdings[i] += qty;
        fill.executed[i] = qty as i64;
        fill.fees += fee;
        fill.spread_cost += qty as f64 * costs.half_spread;
    }
    fill
}
