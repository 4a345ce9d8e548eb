use nalgebra::DMatrix;

use super::ObservableMap;
use crate::error::{Error, Result};
use crate::turbine::ControlInput;

/// Sampled rotor speed and inputs of one turbine group at a fixed step.
///
/// Sample `k` pairs `omega_r[k]` with the input `inputs[k]` applied over the
/// following interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub omega_r: Vec<f64>,
    pub inputs: Vec<ControlInput>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self { omega_r: Vec::with_capacity(n), inputs: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, omega_r: f64, u: ControlInput) {
        self.omega_r.push(omega_r);
        self.inputs.push(u);
    }

    pub fn len(&self) -> usize {
        self.omega_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_r.is_empty()
    }

    /// Samples `range` as a new trajectory.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Trajectory {
        Trajectory { omega_r: self.omega_r[range.clone()].to_vec(), inputs: self.inputs[range].to_vec() }
    }

    fn check(&self) -> Result<()> {
        if self.omega_r.len() != self.inputs.len() {
            return Err(Error::Dimension(format!(
                "trajectory has {} speeds but {} inputs",
                self.omega_r.len(),
                self.inputs.len()
            )));
        }
        Ok(())
    }
}

/// Lifted snapshot pairs `(z_k, z_{k+1})` with the inputs `u_k`, one column
/// per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub z: DMatrix<f64>,
    pub z_next: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub map: ObservableMap,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.z.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    /// Stacks another set's columns after this one's. Both sets must use the
    /// same observables.
    pub fn append(&mut self, other: &SnapshotSet) -> Result<()> {
        if self.map != other.map {
            return Err(Error::Dimension("cannot merge snapshots with different observables".into()));
        }
        let join = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
            m.columns_mut(0, a.ncols()).copy_from(a);
            m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
            m
        };
        self.z = join(&self.z, &other.z);
        self.z_next = join(&self.z_next, &other.z_next);
        self.u = join(&self.u, &other.u);
        Ok(())
    }

    /// Keeps only the last `n` pairs.
    pub fn tail(&self, n: usize) -> SnapshotSet {
        let n = n.min(self.len());
        let start = self.len() - n;
        SnapshotSet {
            z: self.z.columns(start, n).into_owned(),
            z_next: self.z_next.columns(start, n).into_owned(),
            u: self.u.columns(start, n).into_owned(),
            map: self.map.clone(),
        }
    }
}

/// Lifts consecutive samples of one trajectory into `len − 1` pairs.
pub fn collect_snapshots(trajectory: &Trajectory, map: &ObservableMap) -> Result<SnapshotSet> {
    trajectory.check()?;
    let n = trajectory.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("a trajectory of {n} samples has no snapshot pairs")));
    }
    let dim = map.dim();
    let mut lifted = DMatrix::zeros(dim, n);
    for (k, (&w, u)) in trajectory.omega_r.iter().zip(&trajectory.inputs).enumerate() {
        map.lift_into(w, u, lifted.column_mut(k).as_mut_slice())?;
    }
    let mut u = DMatrix::zeros(2, n - 1);
    for (k, inp) in trajectory.inputs[..n - 1].iter().enumerate() {
        u[(0, k)] = inp.p_ref;
        u[(1, k)] = inp.v_w;
    }
    Ok(SnapshotSet {
        z: lifted.columns(0, n - 1).into_owned(),
        z_next: lifted.columns(1, n - 1).into_owned(),
        u,
        map: map.clone(),
    })
}

/// Snapshots from several independent trajectories; no pair spans the seam
/// between two of them.
pub fn collect_snapshots_from(trajectories: &[Trajectory], map: &ObservableMap) -> Result<SnapshotSet> {
    let mut iter = trajectories.iter();
    let first = iter.next().ok_or_else(|| Error::InsufficientData("no trajectories".into()))?;
    let mut set = collect_snapshots(first, map)?;
    for t in iter {
        set.append(&collect_snapshots(t, map)?)?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(n: usize, offset: f64) -> Trajectory {
        let mut t = Trajectory::default();
        for k in 0..n {
            t.push(offset + 0.01 * k as f64, ControlInput::new(0.5, 8.0 + 0.1 * k as f64));
        }
        t
    }

    #[test]
    fn pair_count() {
        let map = ObservableMap::sdmd(0.1).unwrap();
        assert_eq!(collect_snapshots(&traj(2, 1.0), &map).unwrap().len(), 1);
        assert_eq!(collect_snapshots(&traj(6000, 1.0), &map).unwrap().len(), 5999);
        assert!(collect_snapshots(&traj(1, 1.0), &map).is_err());
        assert!(collect_snapshots(&traj(0, 1.0), &map).is_err());
    }

    #[test]
    fn no_pairs_across_seam() {
        let map = ObservableMap::sdmd(0.1).unwrap();
        let a = traj(5, 1.0);
        let b = traj(4, 2.0);
        let set = collect_snapshots_from(&[a.clone(), b.clone()], &map).unwrap();
        assert_eq!(set.len(), 4 + 3);
        // every pair advances rotor speed by exactly one sample step
        for k in 0..set.len() {
            assert!((set.z_next[(0, k)] - set.z[(0, k)] - 0.01).abs() < 1e-12, "pair {k}");
        }
    }

    #[test]
    fn columns_align_with_inputs() {
        let map = ObservableMap::sdmd(0.1).unwrap();
        let t = traj(4, 1.0);
        let set = collect_snapshots(&t, &map).unwrap();
        for k in 0..3 {
            assert_eq!(set.z[(0, k)], t.omega_r[k]);
            assert_eq!(set.z_next[(0, k)], t.omega_r[k + 1]);
            assert_eq!(set.u[(1, k)], t.inputs[k].v_w);
        }
    }
}
