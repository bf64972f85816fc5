//! Synthetic order data with planted fraud campaigns.
//!
//! Each campaign fixes one value per attribute; a member reuses it with the
//! overlap probability of the attribute's category and otherwise draws a
//! fresh value like a legitimate order would. Legitimate orders draw every
//! value from the attribute's pool (or a never-seen token for unbounded
//! attributes), occasionally repeating a value seen on an earlier
//! legitimate order. A share of legitimate orders are repeat orders of an
//! earlier customer and copy most of that order's values. A few campaign
//! orders take over a legitimate customer's account and copy its customer,
//! payment and billing values. Campaigns are packed into short time windows
//! while legitimate orders spread over the whole span.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{AttributeCategory, AttributeSchema, Dataset, Label, Record};

const DAY: i64 = 86_400;

/// Value distribution of one attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeProfile {
    /// Size of the value pool; `None` draws a new value every time.
    pub cardinality: Option<u64>,
    /// Probability that a freshly drawn value is missing.
    pub null_prob: f64,
}

impl AttributeProfile {
    pub const UNBOUNDED: AttributeProfile = AttributeProfile {
        cardinality: None,
        null_prob: 0.0,
    };

    pub fn pool(cardinality: u64) -> Self {
        AttributeProfile {
            cardinality: Some(cardinality),
            null_prob: 0.0,
        }
    }

    pub fn with_nulls(self, null_prob: f64) -> Self {
        AttributeProfile { null_prob, ..self }
    }
}

const DEFAULT_PROFILES: [(&str, Option<u64>, f64); 37] = [
    ("customer_id", None, 0.0),
    ("customer_email", None, 0.0),
    ("customer_name", Some(5_000), 0.0),
    ("customer_phone", None, 0.1),
    ("customer_birthdate", Some(20_000), 0.2),
    ("customer_account_age", Some(100), 0.0),
    ("customer_type", Some(3), 0.0),
    ("customer_language", Some(8), 0.0),
    ("customer_device", Some(5), 0.0),
    ("delivery_method", Some(3), 0.0),
    ("delivery_carrier", Some(4), 0.0),
    ("delivery_option", Some(6), 0.0),
    ("ship_name", Some(5_000), 0.0),
    ("ship_street", Some(3_000), 0.0),
    ("ship_house_number", Some(200), 0.0),
    ("ship_zip", Some(2_000), 0.0),
    ("ship_city", Some(500), 0.0),
    ("ship_country", Some(10), 0.0),
    ("ship_address_type", Some(3), 0.0),
    ("payment_method", Some(6), 0.0),
    ("card_bin", Some(150), 0.4),
    ("card_number", None, 0.4),
    ("card_country", Some(12), 0.4),
    ("card_expiry", Some(60), 0.4),
    ("iban", None, 0.8),
    ("payment_provider", Some(5), 0.0),
    ("payment_account", None, 0.3),
    ("payment_installments", Some(4), 0.0),
    ("voucher_code", Some(300), 0.9),
    ("gift_card", None, 0.95),
    ("bill_name", Some(5_000), 0.0),
    ("bill_street", Some(3_000), 0.0),
    ("bill_house_number", Some(200), 0.0),
    ("bill_zip", Some(2_000), 0.0),
    ("bill_city", Some(500), 0.0),
    ("bill_country", Some(10), 0.0),
    ("bill_email", None, 0.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_legit: usize,
    pub n_fraud: usize,
    pub n_campaigns: usize,
    /// Inclusive bounds on campaign size.
    pub campaign_size_range: (usize, usize),
    /// Per category, probability that a member reuses the campaign value.
    /// Indexed in [`AttributeCategory::ALL`] order.
    pub intra_campaign_overlap: [f64; 5],
    /// Probability that a legitimate order copies an attribute value from
    /// an earlier legitimate order.
    pub legit_repeat_prob: f64,
    /// Probability that a legitimate order repeats an earlier legitimate
    /// customer.
    pub repeat_customer_prob: f64,
    /// Per category, probability that a repeat order keeps the earlier
    /// order's value. Indexed in [`AttributeCategory::ALL`] order.
    pub repeat_customer_overlap: [f64; 5],
    /// Probability that a campaign order copies the customer, payment and
    /// billing values of a random legitimate order.
    pub takeover_prob: f64,
    /// Profiles by attribute id; missing ids use `default_profile`.
    pub profiles: HashMap<String, AttributeProfile>,
    pub default_profile: AttributeProfile,
    /// Epoch seconds of the first possible order.
    pub start: i64,
    pub span_days: u32,
    /// Length of the window each campaign's orders fall into.
    pub campaign_days: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_legit: 10_000,
            n_fraud: 5_000,
            n_campaigns: 50,
            campaign_size_range: (10, 400),
            intra_campaign_overlap: [0.3, 0.7, 0.9, 0.4, 0.9],
            legit_repeat_prob: 0.05,
            repeat_customer_prob: 0.15,
            repeat_customer_overlap: [0.9, 0.3, 0.9, 0.6, 0.9],
            takeover_prob: 0.03,
            profiles: DEFAULT_PROFILES
                .iter()
                .map(|&(id, cardinality, null_prob)| {
                    (
                        id.to_owned(),
                        AttributeProfile {
                            cardinality,
                            null_prob,
                        },
                    )
                })
                .collect(),
            default_profile: AttributeProfile::UNBOUNDED,
            // 2024-01-01T00:00:00Z
            start: 1_704_067_200,
            span_days: 60,
            campaign_days: 3,
        }
    }
}

impl GeneratorConfig {
    pub fn overlap(&self, category: AttributeCategory) -> f64 {
        self.intra_campaign_overlap[category as usize]
    }

    pub fn set_overlap(&mut self, category: AttributeCategory, p: f64) {
        self.intra_campaign_overlap[category as usize] = p;
    }

    pub fn profile(&self, attribute_id: &str) -> AttributeProfile {
        self.profiles
            .get(attribute_id)
            .copied()
            .unwrap_or(self.default_profile)
    }

    /// Same shape scaled to `n` records, keeping the fraud share and the
    /// average campaign size.
    pub fn scaled_to(&self, n: usize) -> GeneratorConfig {
        let total = (self.n_legit + self.n_fraud).max(1);
        let n_fraud = n * self.n_fraud / total;
        let avg = self
            .n_fraud
            .checked_div(self.n_campaigns)
            .unwrap_or(1)
            .max(1);
        let (lo, hi) = self.campaign_size_range;
        let mut n_campaigns = n_fraud.div_ceil(avg);
        n_campaigns = n_campaigns
            .max(n_fraud.div_ceil(hi.max(1)))
            .min(n_fraud / lo.max(1));
        GeneratorConfig {
            n_legit: n - n_fraud,
            n_fraud,
            n_campaigns,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = self
            .intra_campaign_overlap
            .iter()
            .chain(&self.repeat_customer_overlap)
            .chain([
                &self.legit_repeat_prob,
                &self.repeat_customer_prob,
                &self.takeover_prob,
            ])
            .copied()
            .chain(self.profiles.values().map(|p| p.null_prob))
            .chain([self.default_profile.null_prob]);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} is outside [0, 1]"
                )));
            }
        }
        let cards = self.profiles.values().chain([&self.default_profile]);
        if cards.into_iter().any(|p| p.cardinality == Some(0)) {
            return Err(Error::InvalidParameter(
                "cardinality targets must be at least 1".into(),
            ));
        }
        if self.span_days == 0 || self.campaign_days == 0 || self.campaign_days > self.span_days {
            return Err(Error::InvalidParameter(
                "need 0 < campaign_days <= span_days".into(),
            ));
        }
        if self.n_fraud > 0 {
            let (lo, hi) = self.campaign_size_range;
            let feasible = lo <= hi
                && hi >= 1
                && self.n_campaigns >= 1
                && self
                    .n_campaigns
                    .checked_mul(lo)
                    .is_some_and(|v| v <= self.n_fraud)
                && self.n_campaigns.saturating_mul(hi) >= self.n_fraud;
            if !feasible {
                return Err(Error::InvalidParameter(format!(
                    "{} campaigns with sizes in [{lo}, {hi}] cannot hold {} frauds",
                    self.n_campaigns, self.n_fraud
                )));
            }
        }
        Ok(())
    }
}

/// Campaign of every generated record; `-1` for legitimate orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignGroundTruth {
    pub record_ids: Vec<String>,
    pub campaign_id: Vec<i64>,
}

impl CampaignGroundTruth {
    pub fn campaign_count(&self) -> usize {
        self.campaign_id
            .iter()
            .filter(|&&c| c >= 0)
            .max()
            .map_or(0, |&c| c as usize + 1)
    }

    /// Record indices of every campaign, by campaign id.
    pub fn campaigns(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.campaign_count()];
        for (i, &c) in self.campaign_id.iter().enumerate() {
            if c >= 0 {
                out[c as usize].push(i);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["record_id", "campaign_id"]).map_err(io)?;
        for (id, c) in self.record_ids.iter().zip(&self.campaign_id) {
            w.write_record([id.as_str(), &c.to_string()]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Splits `total` into `k` sizes within `[lo, hi]`, unevenly.
fn campaign_sizes(
    rng: &mut ChaCha8Rng,
    total: usize,
    k: usize,
    lo: usize,
    hi: usize,
) -> Vec<usize> {
    let mut sizes = vec![lo; k];
    let mut remaining = total - k * lo;
    if remaining == 0 {
        return sizes;
    }
    let mut weights: Vec<f64> = (0..k)
        .map(|_| {
            if lo < hi {
                rng.gen_range(0.05f64..1.0).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let mut dist = WeightedIndex::new(&weights).expect("feasible sizes leave room");
    while remaining > 0 {
        let j = dist.sample(rng);
        sizes[j] += 1;
        remaining -= 1;
        if sizes[j] == hi && remaining > 0 {
            weights[j] = 0.0;
            dist.update_weights(&[(j, &0.0)])
                .expect("feasible sizes leave room");
        }
    }
    sizes
}

struct ValueSource {
    prefix: String,
    profile: AttributeProfile,
    next_fresh: u64,
}

impl ValueSource {
    fn draw_value(&mut self, rng: &mut ChaCha8Rng) -> String {
        match self.profile.cardinality {
            Some(k) => format!("{}{}", self.prefix, rng.gen_range(0..k)),
            None => {
                self.next_fresh += 1;
                format!("{}u{}", self.prefix, self.next_fresh)
            }
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Option<String> {
        if self.profile.null_prob > 0.0 && rng.gen_bool(self.profile.null_prob) {
            None
        } else {
            Some(self.draw_value(rng))
        }
    }
}

/// Generates `n_legit + n_fraud` records sorted by timestamp. Frauds carry
/// label `F`, legitimate orders `L`.
pub fn generate(
    cfg: &GeneratorConfig,
    schema: &AttributeSchema,
) -> Result<(Dataset, CampaignGroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sources: Vec<ValueSource> = schema
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, a)| ValueSource {
            prefix: format!("v{i}_"),
            profile: cfg.profile(&a.id),
            next_fresh: 0,
        })
        .collect();
    let overlap: Vec<f64> = schema
        .attributes()
        .iter()
        .map(|a| cfg.overlap(a.category))
        .collect();
    let keep: Vec<f64> = schema
        .attributes()
        .iter()
        .map(|a| cfg.repeat_customer_overlap[a.category as usize])
        .collect();
    let stolen: Vec<bool> = schema
        .attributes()
        .iter()
        .map(|a| {
            matches!(
                a.category,
                AttributeCategory::Customer
                    | AttributeCategory::Payment
                    | AttributeCategory::Billing
            )
        })
        .collect();
    let span = i64::from(cfg.span_days) * DAY;

    // (timestamp, campaign, values)
    let mut rows: Vec<(i64, i64, Vec<Option<String>>)> =
        Vec::with_capacity(cfg.n_legit + cfg.n_fraud);

    let mut legit_rows: Vec<usize> = Vec::with_capacity(cfg.n_legit);
    for _ in 0..cfg.n_legit {
        let mut values = Vec::with_capacity(sources.len());
        let repeat_of = (!legit_rows.is_empty() && rng.gen_bool(cfg.repeat_customer_prob))
            .then(|| legit_rows[rng.gen_range(0..legit_rows.len())]);
        for (a, src) in sources.iter_mut().enumerate() {
            let v = if let Some(r) = repeat_of.filter(|_| rng.gen_bool(keep[a])) {
                rows[r].2[a].clone()
            } else if !legit_rows.is_empty() && rng.gen_bool(cfg.legit_repeat_prob) {
                let earlier = legit_rows[rng.gen_range(0..legit_rows.len())];
                rows[earlier].2[a].clone()
            } else {
                src.draw(&mut rng)
            };
            values.push(v);
        }
        let ts = cfg.start + rng.gen_range(0..span);
        legit_rows.push(rows.len());
        rows.push((ts, -1, values));
    }

    if cfg.n_fraud > 0 {
        let (lo, hi) = cfg.campaign_size_range;
        let sizes = campaign_sizes(&mut rng, cfg.n_fraud, cfg.n_campaigns, lo, hi);
        let window = i64::from(cfg.campaign_days) * DAY;
        for (k, &size) in sizes.iter().enumerate() {
            let shared: Vec<String> = sources.iter_mut().map(|s| s.draw_value(&mut rng)).collect();
            let begin = cfg.start + rng.gen_range(0..=span - window);
            for _ in 0..size {
                let victim = (!legit_rows.is_empty() && rng.gen_bool(cfg.takeover_prob))
                    .then(|| legit_rows[rng.gen_range(0..legit_rows.len())]);
                let values = sources
                    .iter_mut()
                    .enumerate()
                    .map(|(a, src)| {
                        if let Some(v) = victim.filter(|_| stolen[a]) {
                            rows[v].2[a].clone()
                        } else if rng.gen_bool(overlap[a]) {
                            Some(shared[a].clone())
                        } else {
                            src.draw(&mut rng)
                        }
                    })
                    .collect();
                let ts = begin + rng.gen_range(0..window);
                rows.push((ts, k as i64, values));
            }
        }
    }

    // stable: equal timestamps keep generation order
    rows.sort_by_key(|r| r.0);
    let width = (rows.len().max(1) - 1).to_string().len().max(6);
    let mut records = Vec::with_capacity(rows.len());
    let mut truth = CampaignGroundTruth {
        record_ids: Vec::with_capacity(rows.len()),
        campaign_id: Vec::with_capacity(rows.len()),
    };
    for (i, (ts, campaign, values)) in rows.into_iter().enumerate() {
        let record_id = format!("o{i:0width$}");
        truth.record_ids.push(record_id.clone());
        truth.campaign_id.push(campaign);
        records.push(Record {
            record_id,
            timestamp: ts,
            label: if campaign >= 0 {
                Label::Fraud
            } else {
                Label::Legitimate
            },
            values,
        });
    }
    let data = Dataset::new(schema.clone(), records)?;
    Ok((data, truth))
}
