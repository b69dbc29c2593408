//! The command registry: every job command is a [`Command`] trait object looked up by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use dagger_core::cechalex::{build_jet_cech, compare_with_derham, CechError};
use dagger_core::dagalg::{FringeElement, Presentation, TruncationLevel, UniPoly};
use dagger_core::derham::{
    cohomology, cohomology_at_levels, cohomology_with_support, poincare_homotopy_check, CohomologyResult, DerhamError,
};
use dagger_core::descent::{
    amitsur_complex, check_cocycle, descend, mittag_leffler_check, roos_complex, AmitsurReport, DescentDatum,
    FiniteAlgebra, SplitAlgebra, Tower,
};
use dagger_core::diffcalc::{cocycle_check, taylor_stratification, Connection};
use dagger_core::functor::{pullback_module, pushforward_finite, trace_splitting, GroupAction, RingMap};

use crate::grammar::Block;
use crate::job::{element, random_element, rng, scalar, JobError, JobSpec};
use crate::report::Report;

/// Options from the command line that apply to every job.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub sweep: Option<Vec<usize>>,
}

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, job: &JobSpec, opts: &RunOptions, report: &mut Report) -> Result<(), JobError>;
}

#[derive(Default)]
pub struct Registry {
    commands: BTreeMap<&'static str, Box<dyn Command>>,
}

impl Registry {
    pub fn register(&mut self, c: Box<dyn Command>) -> &mut Self {
        self.commands.insert(c.name(), c);
        self
    }

    pub fn get(&self, name: &str) -> Option<&dyn Command> {
        self.commands.get(name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.commands.keys().copied()
    }

    pub fn summaries(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.commands.values().map(|c| (c.name(), c.summary()))
    }

    /// Registry with every built-in command.
    pub fn builtin() -> Self {
        let mut r = Registry::default();
        r.register(Box::new(CohomologyCmd))
            .register(Box::new(SupportCmd))
            .register(Box::new(JetsCmd))
            .register(Box::new(CompareCmd))
            .register(Box::new(PushforwardCmd))
            .register(Box::new(PullbackCmd))
            .register(Box::new(DescendCmd))
            .register(Box::new(AmitsurCmd))
            .register(Box::new(RoosCmd))
            .register(Box::new(HomotopyCmd));
        r
    }
}

fn derham_err(context: &str, e: DerhamError) -> JobError {
    match e {
        DerhamError::NotStabilized { table } => JobError::NotStabilized(context.into(), table),
        DerhamError::Unsupported(why) => JobError::Unsupported(format!("{context}: {why}")),
        other => JobError::library(context, other),
    }
}

fn cech_err(context: &str, e: CechError) -> JobError {
    match e {
        CechError::Derham(d) => derham_err(context, d),
        CechError::NotStabilized { table } => {
            JobError::NotStabilized(context.into(), table.into_iter().map(|(d, h)| (d, vec![h])).collect())
        }
        other => JobError::library(context, other),
    }
}

fn level(job: &JobSpec) -> TruncationLevel {
    let t = job.truncation;
    TruncationLevel {
        degree: t.d,
        precision: t.precision,
        fringe: TruncationLevel::default().fringe,
        jet_order: t.n_jet as usize,
        depth: t.k_max,
    }
}

fn levels(job: &JobSpec, opts: &RunOptions) -> Vec<usize> {
    opts.sweep.clone().unwrap_or_else(|| vec![job.truncation.d, job.truncation.d + 4])
}

fn echo_common(job: &JobSpec, pres: &Presentation, report: &mut Report) {
    report.input("presentation", pres);
    let t = job.truncation;
    report.input("truncation", format!("d={} N={} n={} n_jet={} k_max={}", t.d, t.precision, t.n, t.n_jet, t.k_max));
}

fn render_connection(c: &Connection) -> String {
    c.matrices().iter().map(|m| format!("{m:?}")).collect::<Vec<_>>().join(" ; ")
}

fn record_cohomology(report: &mut Report, prefix: &str, r: &CohomologyResult) {
    report.dims(&format!("{prefix}dims"), &r.dims);
    for (k, forms) in r.basis.iter().enumerate() {
        if !forms.is_empty() || k < r.dims.len() {
            report.basis.push((format!("{prefix}h{k}"), forms.iter().map(|f| f.render()).collect()));
        }
    }
    report.stabilization = r.stabilization.clone();
    report.precision_loss = report.precision_loss.max(r.precision_loss);
}

struct CohomologyCmd;

impl Command for CohomologyCmd {
    fn name(&self) -> &'static str {
        "cohomology"
    }
    fn summary(&self) -> &'static str {
        "de Rham cohomology of a connection, with basis and stabilization table"
    }
    fn run(&self, job: &JobSpec, opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let pres = job.presentation()?;
        let conn = job.connection_or_trivial(&pres)?;
        echo_common(job, &pres, report);
        report.input("connection", render_connection(&conn));
        let r = cohomology_at_levels(&conn, &levels(job, opts)).map_err(|e| derham_err("cohomology", e))?;
        record_cohomology(report, "", &r);
        report.result("window", r.window);
        report.check("stabilized", true);
        Ok(())
    }
}

struct SupportCmd;

impl Command for SupportCmd {
    fn name(&self) -> &'static str {
        "support"
    }
    fn summary(&self) -> &'static str {
        "cohomology with support in the zeros of a polynomial on the affine line"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let pres = job.presentation()?;
        let conn = job.connection_or_trivial(&pres)?;
        let e = job.block.require("support")?;
        let coeffs = e.words()?.into_iter().map(|(w, p)| scalar(&w, p, pres.spec())).collect::<Result<Vec<_>, _>>()?;
        let f = UniPoly::new(pres.spec(), coeffs);
        echo_common(job, &pres, report);
        report.input("support", format!("{f}"));
        let r = cohomology_with_support(&conn, &f, job.truncation.d).map_err(|e| derham_err("support", e))?;
        report.dims("dims", &r.dims);
        report.dims("ambient", &r.ambient);
        report.dims("open", &r.open);
        report.dims("restriction_ranks", &r.restriction_ranks);
        report.result("connecting_rank", r.connecting_rank);
        let chi = |v: &[usize]| {
            v.iter().enumerate().map(|(i, &d)| if i % 2 == 0 { d as i64 } else { -(d as i64) }).sum::<i64>()
        };
        report.check("euler_characteristic", r.euler_characteristic() == chi(&r.ambient) - chi(&r.open));
        Ok(())
    }
}

struct JetsCmd;

impl Command for JetsCmd {
    fn name(&self) -> &'static str {
        "jets"
    }
    fn summary(&self) -> &'static str {
        "jet Čech–Alexander cohomology of the Taylor stratification"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let pres = job.presentation()?;
        let conn = job.connection_or_trivial(&pres)?;
        echo_common(job, &pres, report);
        report.input("connection", render_connection(&conn));
        let t = job.truncation;
        let strat = taylor_stratification(&conn, t.n_jet).map_err(|e| JobError::library("stratification", e))?;
        let cc = cocycle_check(&strat);
        report.result("cocycle_checked_through", cc.checked_through);
        report.check("cocycle", cc.passed());
        if !cc.passed() {
            return Ok(());
        }
        let cx = build_jet_cech(&strat, t.k_max, t.n).map_err(|e| cech_err("jets", e))?;
        report.check("square_zero", cx.check_square_zero(1).is_ok());
        let mut dims = Vec::new();
        for k in 0..t.k_max {
            dims.push(cx.stable_cohomology(k, t.d).map_err(|e| cech_err("jets", e))?);
        }
        report.dims("dims", &dims);
        Ok(())
    }
}

struct CompareCmd;

impl Command for CompareCmd {
    fn name(&self) -> &'static str {
        "compare"
    }
    fn summary(&self) -> &'static str {
        "jet Čech–Alexander cohomology against de Rham cohomology"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let pres = job.presentation()?;
        let conn = job.connection_or_trivial(&pres)?;
        echo_common(job, &pres, report);
        let orders: Vec<u32> = match job.block.entry("orders") {
            Some(e) => e.parse_list("positive integers")?,
            None => vec![job.truncation.n_jet],
        };
        report.input("orders", orders.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
        let r = compare_with_derham(&conn, &orders, &level(job)).map_err(|e| cech_err("compare", e))?;
        report.dims("derham", &r.derham);
        for (n, dims) in &r.jet {
            report.dims(&format!("jet_n{n}"), dims);
        }
        if let Some((n, k)) = r.first_mismatch {
            report.result("first_mismatch", format!("n={n} degree={k}"));
        }
        report.check("agrees", r.agrees());
        Ok(())
    }
}

/// `cover { kind = quadratic  a = … }` or `cover { kind = kummer  m = … }`.
fn cover(job: &JobSpec, base: &Arc<Presentation>) -> Result<RingMap, JobError> {
    let b = job.block.block("cover").ok_or_else(|| job.block.pos.error("job needs a `cover` block"))?;
    cover_from(b, base)
}

fn cover_from(b: &Block, base: &Arc<Presentation>) -> Result<RingMap, JobError> {
    b.expect_only(&["kind", "a", "m", "degree"], &[])?;
    let (kind, kpos) = b.require("kind")?.single()?;
    let lib = |e| JobError::library("cover", e);
    match kind.as_str() {
        "quadratic" => RingMap::quadratic_cover(base, &element(b.require("a")?, base)?).map_err(lib),
        "kummer" => {
            let m: u32 = b.require("m")?.parse_single("a positive integer")?;
            let phi = RingMap::kummer_cover(base.spec(), m).map_err(lib)?;
            if **phi.source() != **base {
                return Err(JobError::Unsupported(format!("Kummer covers start from Torus(1), not {base}")));
            }
            Ok(phi)
        }
        other => Err(kpos.error(format!("unknown cover kind `{other}`")).into()),
    }
}

struct PushforwardCmd;

impl Command for PushforwardCmd {
    fn name(&self) -> &'static str {
        "pushforward"
    }
    fn summary(&self) -> &'static str {
        "finite pushforward along a cover, with cohomology comparison and trace splitting"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let base = job.presentation()?;
        let phi = cover(job, &base)?;
        let up = job.connection_or_trivial(phi.target())?;
        echo_common(job, &base, report);
        report.input("cover", &phi);
        report.input("connection", render_connection(&up));
        let push = pushforward_finite(&up, &phi).map_err(|e| JobError::library("pushforward", e))?;
        report.result("rank", push.rank());
        report.result("pushforward", render_connection(&push));
        let t = level(job);
        let down = cohomology(&push, &t).map_err(|e| derham_err("cohomology downstairs", e))?;
        let upc = cohomology(&up, &t).map_err(|e| derham_err("cohomology upstairs", e))?;
        report.dims("dims_down", &down.dims);
        report.dims("dims_up", &upc.dims);
        report.precision_loss = down.precision_loss.max(upc.precision_loss);
        report.check("dims_agree", down.dims == upc.dims);
        // the trace idempotent lives on f_* f^* M, so it applies when the upstairs module is pulled back
        let pulled_trivial = up.is_trivial().then(|| Connection::trivial(&base, up.rank()));
        if let (Ok(group), Some(m)) = (GroupAction::roots_of_unity(&phi), pulled_trivial) {
            let s = trace_splitting(&m, &phi, &group).map_err(|e| JobError::library("trace splitting", e))?;
            report.result("group_order", group.order());
            report.check("idempotent", s.idempotent_ok);
            report.check("idempotent_horizontal", s.commutes);
            report.check("trace_recovers_base", s.recovers);
        }
        Ok(())
    }
}

struct PullbackCmd;

impl Command for PullbackCmd {
    fn name(&self) -> &'static str {
        "pullback"
    }
    fn summary(&self) -> &'static str {
        "pullback of a connection along a cover"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let base = job.presentation()?;
        let phi = cover(job, &base)?;
        let down = job.connection_or_trivial(&base)?;
        echo_common(job, &base, report);
        report.input("cover", &phi);
        report.input("connection", render_connection(&down));
        let up = pullback_module(&down, &phi).map_err(|e| JobError::library("pullback", e))?;
        report.result("pullback", render_connection(&up));
        let t = level(job);
        let hd = cohomology(&down, &t).map_err(|e| derham_err("cohomology downstairs", e))?;
        let hu = cohomology(&up, &t).map_err(|e| derham_err("cohomology upstairs", e))?;
        report.dims("dims_down", &hd.dims);
        report.dims("dims_up", &hu.dims);
        report.precision_loss = hd.precision_loss.max(hu.precision_loss);
        // H^0 can only grow under pullback
        report.check("h0_injects", hd.dims.first() <= hu.dims.first());
        Ok(())
    }
}

struct DescendCmd;

impl Command for DescendCmd {
    fn name(&self) -> &'static str {
        "descend"
    }
    fn summary(&self) -> &'static str {
        "descent of a glued module along a finite free cover"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let base = job.presentation()?;
        let phi = cover(job, &base)?;
        let alg = Arc::new(FiniteAlgebra::new(&phi).map_err(|e| JobError::library("cover", e))?);
        echo_common(job, &base, report);
        report.input("cover", &phi);
        let (kind, kpos) =
            job.block.entry("datum").map_or(Ok(("canonical".to_string(), job.block.pos)), |e| e.single())?;
        report.input("datum", &kind);
        let lib = |e| JobError::library("descend", e);
        let (datum, expected) = match kind.as_str() {
            "canonical" => {
                let m0 = job.connection_or_trivial(&base)?;
                (DescentDatum::canonical(&alg, &m0).map_err(lib)?, Some(m0))
            }
            "branch-swap" => {
                let m = job.connection_or_trivial(alg.cover())?;
                (DescentDatum::branch_swap(&alg, Some(m)).map_err(lib)?, None)
            }
            other => return Err(kpos.error(format!("unknown datum `{other}` (canonical or branch-swap)")).into()),
        };
        let cc = check_cocycle(&datum);
        report.check("cocycle", cc.passed);
        if let Some(o) = cc.offending {
            report.result("offending", o);
            return Ok(());
        }
        let out = descend(&datum).map_err(lib)?;
        report.result("rank", out.rank);
        if let Some(c) = &out.connection {
            report.result("connection", render_connection(c));
        }
        report.check("base_change_invertible", out.base_change_ok);
        if let (Some(m0), Some(c)) = (expected, &out.connection) {
            report.check("roundtrip", *c == m0);
        }
        Ok(())
    }
}

struct AmitsurCmd;

impl Command for AmitsurCmd {
    fn name(&self) -> &'static str {
        "amitsur"
    }
    fn summary(&self) -> &'static str {
        "exactness of the Amitsur complex of a finite free cover"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let rank: usize = job.block.entry("rank").map_or(Ok(1), |e| e.parse_single("a non-negative integer"))?;
        let length = job.truncation.k_max;
        let cb = job.block.block("cover").ok_or_else(|| job.block.pos.error("job needs a `cover` block"))?;
        let lib = |e| JobError::library("amitsur", e);
        let rep: AmitsurReport = if cb.entry("kind").map(|e| e.single()).transpose()?.is_some_and(|(k, _)| k == "split")
        {
            cb.expect_only(&["kind", "degree"], &[])?;
            let degree: usize = cb.require("degree")?.parse_single("a non-negative integer")?;
            let spec = job.coefficients()?;
            report.input("cover", format!("split algebra of degree {degree} over {spec}"));
            amitsur_complex(rank, &SplitAlgebra { spec, degree }, length).map_err(lib)?
        } else {
            let base = job.presentation()?;
            let phi = cover_from(cb, &base)?;
            echo_common(job, &base, report);
            report.input("cover", &phi);
            let alg = FiniteAlgebra::new(&phi).map_err(lib)?;
            amitsur_complex(rank, &alg, length).map_err(lib)?
        };
        report.input("module_rank", rank);
        report.dims("term_ranks", &rep.term_ranks);
        report.dims("cohomology", &rep.cohomology);
        report.check("h0_is_module", rep.h0_is_module);
        for k in 1..=length {
            report.check(&format!("exact_in_degree_{k}"), rep.exact_in(k));
        }
        Ok(())
    }
}

struct RoosCmd;

impl Command for RoosCmd {
    fn name(&self) -> &'static str {
        "roos"
    }
    fn summary(&self) -> &'static str {
        "lim and lim^1 of a tower through its truncated Roos complex"
    }
    fn run(&self, job: &JobSpec, _opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let b = job.block.block("tower").ok_or_else(|| job.block.pos.error("job needs a `tower` block"))?;
        b.expect_only(&["kind", "dim", "depth"], &[])?;
        let spec = job.coefficients()?;
        let (kind, kpos) = b.require("kind")?.single()?;
        let depth: usize = b.require("depth")?.parse_single("an integer of at least 2")?;
        if depth < 2 {
            return Err(b.require("depth")?.value_pos().error("a tower needs depth at least 2").into());
        }
        let dim = || -> Result<usize, JobError> { Ok(b.require("dim")?.parse_single("a non-negative integer")?) };
        let tower = match kind.as_str() {
            "constant" => Tower::constant(spec, dim()?, depth),
            "zero" => Tower::zero_maps(spec, dim()?, depth),
            "projections" => Tower::projections(spec, depth),
            "mult-t" => Tower::multiplication_by_t(spec, depth),
            other => return Err(kpos.error(format!("unknown tower kind `{other}`")).into()),
        };
        report.input("tower", format!("{kind}, depth {depth}, dims {:?}", tower.dims()));
        let lib = |e| JobError::library("roos", e);
        let r = roos_complex(&tower).map_err(lib)?;
        let ml = mittag_leffler_check(&tower).map_err(lib)?;
        report.result("lim", r.lim);
        report.result("lim1", r.lim1);
        report.result("middle_level", r.middle);
        report.result("product_kernel", r.kernel);
        report.result("product_cokernel", r.cokernel);
        report.result("mittag_leffler", ml);
        report.check("mittag_leffler_forces_lim1_zero", !ml || r.lim1 == 0);
        Ok(())
    }
}

struct HomotopyCmd;

impl Command for HomotopyCmd {
    fn name(&self) -> &'static str {
        "homotopy"
    }
    fn summary(&self) -> &'static str {
        "Poincaré homotopy identities on a random truncated disk element"
    }
    fn run(&self, job: &JobSpec, opts: &RunOptions, report: &mut Report) -> Result<(), JobError> {
        let pres = job.presentation()?;
        let degree: usize = job.block.entry("degree").map_or(Ok(8), |e| e.parse_single("a non-negative integer"))?;
        let seed = opts.seed.or(job.seed).unwrap_or(0);
        echo_common(job, &pres, report);
        report.input("degree", degree);
        report.input("seed", seed);
        let mut r = rng(seed);
        let m: Vec<FringeElement> = (0..=degree).map(|_| random_element(&pres, 2, 0.5, &mut r)).collect();
        let rep = poincare_homotopy_check(&m, job.truncation.n as usize).map_err(|e| derham_err("homotopy", e))?;
        report.result("summary", &rep);
        report.precision_loss = rep.precision_loss;
        let names = ["d_commutes_with_integration", "commutator_is_evaluation", "integration_inverts_up_to_d"];
        for (name, (_, ok)) in names.iter().zip(&rep.identities) {
            report.check(name, *ok);
        }
        Ok(())
    }
}
