//! Dense-matrix oracle for the iterative eigensolver: on small grids the
//! linearized operator is assembled column by column and decomposed with
//! nalgebra, and the subspace iteration must reproduce the bottom of the
//! spectrum.

use nalgebra::{DMatrix, SymmetricEigen};

use nematic::dynamics::ModelParams;
use nematic::grid::{BcMode, FieldRole, Grid, VectorField};
use nematic::init;
use nematic::potential::PotentialSpec;
use nematic::stationary::{kernel_dimension, linearized_apply, lowest_eigenvalues};

fn dense_spectrum(zbar: &VectorField, p: &ModelParams) -> Vec<f64> {
    let grid = &zbar.grid;
    let n = grid.len();
    let dim = 2 * n;
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let mut basis = grid.vector_field(FieldRole::Director);
        if col < n {
            basis.x[col] = 1.0;
        } else {
            basis.y[col - n] = 1.0;
        }
        let img = linearized_apply(zbar, &basis, p);
        for row in 0..n {
            mat[(row, col)] = img.x[row];
            mat[(row + n, col)] = img.y[row];
        }
    }
    // Uniform quadrature weights make the matrix symmetric in the plain basis.
    let sym = 0.5 * (&mat + mat.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut evals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    evals
}

fn params(l: f64, potential: PotentialSpec) -> ModelParams {
    ModelParams { nu: 1.0, elastic: l, delta: 0.0, potential }
}

#[test]
fn iterative_solver_matches_dense_oracle_periodic() {
    let grid = Grid::new(8, 8, BcMode::Periodic).unwrap();
    let p = params(0.7, PotentialSpec::ginzburg_landau());
    // A genuinely non-constant base state exercises the variable coefficients.
    let zbar = init::perturbed_unit_director(&grid, 42, 0.4, 2);
    let dense = dense_spectrum(&zbar, &p);
    let k = 6;
    let iterative = lowest_eigenvalues(&zbar, &p, k).unwrap();
    for (i, (got, want)) in iterative.iter().zip(&dense).enumerate() {
        assert!(
            (got - want).abs() <= 1e-7 * want.abs().max(1.0),
            "eigenvalue {i}: iterative {got} vs dense {want}"
        );
    }
}

#[test]
fn iterative_solver_matches_dense_oracle_bounded() {
    let grid = Grid::new(8, 8, BcMode::DirichletNeumann).unwrap();
    let p = params(0.3, PotentialSpec::capped_gl());
    let zbar = init::perturbed_unit_director(&grid, 9, 0.3, 1);
    let dense = dense_spectrum(&zbar, &p);
    let iterative = lowest_eigenvalues(&zbar, &p, 5).unwrap();
    for (i, (got, want)) in iterative.iter().zip(&dense).enumerate() {
        assert!(
            (got - want).abs() <= 1e-7 * want.abs().max(1.0),
            "eigenvalue {i}: iterative {got} vs dense {want}"
        );
    }
}

#[test]
fn kernel_structure_at_constant_unit_bounded_mode() {
    // With Neumann boundaries the constant-unit equilibrium keeps its
    // one-dimensional kernel and the gap min(2 psi'(1), L lambda_1).
    let grid = Grid::new(12, 12, BcMode::DirichletNeumann).unwrap();
    let p = params(1.0, PotentialSpec::ginzburg_landau());
    let zbar = init::constant_unit_director(&grid);
    let (dim, spectrum) = kernel_dimension(&zbar, &p, None).unwrap();
    assert_eq!(dim, 1, "{spectrum:?}");
    let lambda1 = nematic::stationary::laplacian_lambda1(&grid);
    let expect = (2.0f64).min(p.elastic * lambda1);
    assert!(
        (spectrum[1].eigenvalue - expect).abs() <= 1e-6 * expect,
        "gap {} vs {expect}; {spectrum:?}",
        spectrum[1].eigenvalue
    );
}
