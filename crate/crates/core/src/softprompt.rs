//! Projection of a multimodal embedding into a language model's word
//! embedding space, and prepending it as a single soft-prompt row.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SoftPromptError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite parameter")]
    NonFinite,
    #[error("layer dimensions must be positive")]
    EmptyLayer,
}

fn check_dim(expected: usize, actual: usize) -> Result<(), SoftPromptError> {
    if expected != actual {
        return Err(SoftPromptError::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Affine map from `input_dim` features to `output_dim` word-embedding
/// features. Weights are stored row-major, one row per input feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionLayer {
    input_dim: usize,
    output_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ProjectionLayer {
    /// Builds a layer with zero bias.
    pub fn new(input_dim: usize, output_dim: usize, weights: Vec<f64>) -> Result<Self, SoftPromptError> {
        Self::with_bias(input_dim, output_dim, weights, vec![0.0; output_dim])
    }

    pub fn with_bias(
        input_dim: usize,
        output_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, SoftPromptError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(SoftPromptError::EmptyLayer);
        }
        check_dim(input_dim * output_dim, weights.len())?;
        check_dim(output_dim, bias.len())?;
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(SoftPromptError::NonFinite);
        }
        Ok(Self {
            input_dim,
            output_dim,
            weights,
            bias,
        })
    }

    pub fn identity(dim: usize) -> Result<Self, SoftPromptError> {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        Self::new(dim, dim, w)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.output_dim + col]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// `embedding · weights + bias`.
pub fn project(layer: &ProjectionLayer, embedding: &[f64]) -> Result<Vec<f64>, SoftPromptError> {
    check_dim(layer.input_dim, embedding.len())?;
    let mut out = layer.bias.clone();
    for (x, row) in embedding.iter().zip(layer.weights.chunks_exact(layer.output_dim)) {
        for (o, w) in out.iter_mut().zip(row) {
            *o += x * w;
        }
    }
    Ok(out)
}

/// Gradients of `upstream · project(layer, embedding)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGradient {
    /// Row-major, same layout as the layer weights.
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_embedding: Vec<f64>,
}

pub fn project_gradient(
    layer: &ProjectionLayer,
    embedding: &[f64],
    upstream: &[f64],
) -> Result<ProjectionGradient, SoftPromptError> {
    check_dim(layer.input_dim, embedding.len())?;
    check_dim(layer.output_dim, upstream.len())?;
    let d_weights = embedding
        .iter()
        .flat_map(|x| upstream.iter().map(move |u| x * u))
        .collect();
    let d_embedding = layer
        .weights
        .chunks_exact(layer.output_dim)
        .map(|row| row.iter().zip(upstream).map(|(w, u)| w * u).sum())
        .collect();
    Ok(ProjectionGradient {
        d_weights,
        d_bias: upstream.to_vec(),
        d_embedding,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    SoftPrefix,
    Token,
}

/// Input embedding sequence with exactly one leading soft-prefix row.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSequence {
    rows: Vec<Vec<f64>>,
    tags: Vec<RowSource>,
}

impl PromptSequence {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn tags(&self) -> &[RowSource] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn prepend(projected: &[f64], tokens: &[Vec<f64>]) -> Result<PromptSequence, SoftPromptError> {
    let dim = projected.len();
    for row in tokens {
        check_dim(dim, row.len())?;
    }
    let mut rows = Vec::with_capacity(tokens.len() + 1);
    rows.push(projected.to_vec());
    rows.extend(tokens.iter().cloned());
    let mut tags = vec![RowSource::Token; rows.len()];
    tags[0] = RowSource::SoftPrefix;
    Ok(PromptSequence { rows, tags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_embedding_gives_bias() {
        let layer = ProjectionLayer::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(project(&layer, &[0.0; 3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer() {
        let layer = ProjectionLayer::identity(4).unwrap();
        let x = [0.5, -1.0, 2.0, 3.25];
        assert_eq!(project(&layer, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn hand_computed_3x2() {
        // rows: [1 2], [3 4], [5 6]; x = [1, 0, -1] -> [1-5, 2-6] + bias
        let layer =
            ProjectionLayer::with_bias(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.5, 0.0])
                .unwrap();
        assert_eq!(project(&layer, &[1.0, 0.0, -1.0]).unwrap(), vec![-3.5, -4.0]);
    }

    #[test]
    fn shape_errors() {
        let layer = ProjectionLayer::identity(2).unwrap();
        assert_eq!(
            project(&layer, &[1.0]),
            Err(SoftPromptError::DimensionMismatch { expected: 2, actual: 1 })
        );
        assert!(ProjectionLayer::new(2, 2, vec![0.0; 3]).is_err());
        assert_eq!(
            ProjectionLayer::new(1, 1, vec![f64::NAN]),
            Err(SoftPromptError::NonFinite)
        );
        assert!(prepend(&[1.0, 2.0], &[vec![1.0]]).is_err());
        assert!(project_gradient(&layer, &[1.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn prepend_rows() {
        let p = prepend(&[9.0, 9.0], &[]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.tags(), &[RowSource::SoftPrefix]);
        let toks: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, -(i as f64)]).collect();
        let p = prepend(&[9.0, 9.0], &toks).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(&p.rows()[1..], toks.as_slice());
        assert_eq!(p, prepend(&[9.0, 9.0], &toks).unwrap());
        assert!(p.tags()[1..].iter().all(|t| *t == RowSource::Token));
    }

    #[test]
    fn gradient_trivial_cases() {
        let layer = ProjectionLayer::new(2, 3, vec![1.0; 6]).unwrap();
        let g = project_gradient(&layer, &[1.0, 2.0], &[0.0; 3]).unwrap();
        assert!(g.d_weights.iter().chain(&g.d_bias).chain(&g.d_embedding).all(|v| *v == 0.0));
        let scalar = ProjectionLayer::new(1, 1, vec![3.0]).unwrap();
        let g = project_gradient(&scalar, &[2.0], &[5.0]).unwrap();
        assert_eq!(g.d_weights, vec![10.0]);
        assert_eq!(g.d_bias, vec![5.0]);
        assert_eq!(g.d_embedding, vec![15.0]);
    }
}
