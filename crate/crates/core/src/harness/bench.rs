use std::fmt;
use std::str::FromStr;

use super::{par, HarnessError};
use crate::batch::{self, add, BatchedPage};
use crate::dom::{Document, NodeId};
use crate::elq::{Elq, ElqConfig};
use crate::layout::{Mutation, Page};
use crate::resize::{self, DetectorHost, Strategy};
use crate::style::Stylesheet;

pub const CSV_HEADER: &str = "n,strategy,forced_layouts,scheduled_layouts,memory_units";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchStrategy {
    Object,
    Scroll,
    /// Scroll detectors installed one by one, each completing all steps.
    ScrollNaive,
}

impl BenchStrategy {
    pub const ALL: [BenchStrategy; 3] = [BenchStrategy::Object, BenchStrategy::Scroll, BenchStrategy::ScrollNaive];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchStrategy::Object => "object",
            BenchStrategy::Scroll => "scroll",
            BenchStrategy::ScrollNaive => "scroll-naive",
        }
    }
}

impl fmt::Display for BenchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchStrategy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchStrategy::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| HarnessError::Bench(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Workload {
    /// Install one resize detector per element.
    Install,
    /// Double each element's width and write its height back, batched
    /// unless the strategy is `scroll-naive`.
    DoubleWidth,
}

impl FromStr for Workload {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "install" => Ok(Workload::Install),
            "doubleWidth" | "double-width" => Ok(Workload::DoubleWidth),
            _ => Err(HarnessError::Bench(format!("unknown workload {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub strategy: BenchStrategy,
    pub forced_layouts: u64,
    pub scheduled_layouts: u64,
    pub memory_units: f64,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:?}",
            self.n, self.strategy, self.forced_layouts, self.scheduled_layouts, self.memory_units
        )
    }
}

fn item_page(n: usize) -> (Page, Vec<NodeId>) {
    let mut markup = String::from("<div>");
    for _ in 0..n {
        markup.push_str(r#"<div class="item" style="width: 10px; height: 10px"></div>"#);
    }
    markup.push_str("</div>");
    let doc = Document::parse(&markup).expect("generated markup parses");
    let items = doc.element(doc.root()).expect("root").children.clone();
    (Page::new(doc, Stylesheet::default()), items)
}

pub fn bench(n: usize, workload: Workload, strategy: BenchStrategy) -> Result<BenchRow, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Bench("n must be at least 1".into()));
    }
    let (page, items) = item_page(n);
    match workload {
        Workload::Install => install(page, &items, strategy),
        Workload::DoubleWidth => double_width(page, &items, strategy),
    }
}

fn install(page: Page, items: &[NodeId], strategy: BenchStrategy) -> Result<BenchRow, HarnessError> {
    let detector_strategy = match strategy {
        BenchStrategy::Object => Strategy::Object,
        BenchStrategy::Scroll | BenchStrategy::ScrollNaive => Strategy::Scroll,
    };
    let mut elq = Elq::new(page, ElqConfig { strategy: detector_strategy, ..ElqConfig::default() });
    for &el in items {
        match strategy {
            BenchStrategy::Object => resize::install_object(&mut elq, el),
            BenchStrategy::Scroll => resize::install_scroll(&mut elq, el),
            BenchStrategy::ScrollNaive => {
                let (page, reg) = elq.detector_parts();
                reg.install_scroll_unbatched(page, el)
            }
        }
        .map_err(|e| HarnessError::Bench(e.to_string()))?;
    }
    elq.settle()?;
    let c = elq.counters();
    Ok(BenchRow {
        n: items.len(),
        strategy,
        forced_layouts: c.forced_layouts,
        scheduled_layouts: c.scheduled_layouts,
        memory_units: elq.detectors().ledger().memory_units(),
    })
}

fn double_width(page: Page, items: &[NodeId], strategy: BenchStrategy) -> Result<BenchRow, HarnessError> {
    let mut cx = BatchedPage::new(page);
    let layout_err = |e: crate::layout::LayoutError| HarnessError::Bench(e.to_string());
    for &el in items {
        if strategy == BenchStrategy::ScrollNaive {
            batch::double_width_unbatched(&mut cx, el, move |cx: &mut BatchedPage, h| {
                let _ = cx.page.mutate(set_height(el, h));
            })
            .map_err(layout_err)?;
        } else {
            batch::double_width(&mut cx, el, move |cx: &mut BatchedPage, h| {
                let _ = add(cx, 0, move |cx: &mut BatchedPage| {
                    cx.page.mutate(set_height(el, h))?;
                    Ok(())
                });
            })
            .map_err(layout_err)?;
        }
    }
    cx.run_until_idle();
    if let Some(e) = cx.errors.first() {
        return Err(HarnessError::Bench(e.to_string()));
    }
    let c = cx.page.counters();
    Ok(BenchRow {
        n: items.len(),
        strategy,
        forced_layouts: c.forced_layouts,
        scheduled_layouts: c.scheduled_layouts,
        memory_units: 0.0,
    })
}

fn set_height(el: NodeId, h: f64) -> Mutation {
    Mutation::SetStyle { el, property: "height".into(), value: Some(format!("{h}px")) }
}

/// Runs independent bench cases, in parallel when the feature is on.
pub fn sweep(cases: &[(usize, Workload, BenchStrategy)]) -> Vec<Result<BenchRow, HarnessError>> {
    par::map(cases, |(n, w, s)| bench(*n, *w, *s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_render_as_csv() {
        let row = BenchRow {
            n: 700,
            strategy: BenchStrategy::Object,
            forced_layouts: 700,
            scheduled_layouts: 1,
            memory_units: 385.0,
        };
        assert_eq!(row.csv_line(), "700,object,700,1,385.0");
    }

    #[test]
    fn parses_names() {
        assert_eq!("scroll-naive".parse::<BenchStrategy>().unwrap(), BenchStrategy::ScrollNaive);
        assert_eq!("doubleWidth".parse::<Workload>().unwrap(), Workload::DoubleWidth);
        assert!("fast".parse::<BenchStrategy>().is_err());
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(bench(0, Workload::Install, BenchStrategy::Scroll).is_err());
    }

    #[test]
    fn single_scroll_install_has_no_memory_cost() {
        let row = bench(1, Workload::Install, BenchStrategy::Scroll).unwrap();
        assert_eq!(row.memory_units, 0.0);
    }
}
