"""Multivariate and spatial extreme-value dependence toolkit."""

from .angular import (AngularSample, BayesAngularFit, FreqAngularFit,
                      ParametricAngularModel, PriorSpec, angular_density,
                      angular_sample_parametric, ppp_fit_bayes, ppp_fit_mle,
                      pseudo_polar, select_exceedances)
from .gev import (BlockMaximaSeries, GevFit, GevParams, block_maxima, gev_cdf,
                  gev_fit_mle, gev_pdf, gev_quantile, gev_rvs, to_unit_frechet)
from .madogram import (BernsteinPickands, SimplexGrid, beed, beed_project,
                       bernstein_basis, extremal_coefficient,
                       madogram_pickands, pairwise_extremal_coeffs,
                       pam_cluster_madogram)
from .maxstable import (MaxStableField, PowExpCorr, SiteSet, conditional_sim,
                        extcoeff_vs_distance, powexp_corr, sim_extremal_t)
from .npbayes import (AdaptiveState, BernsteinAngular, ChainSummary,
                      PosteriorChain, chain_summary, diagnostics, H_cdf,
                      h_density, joint_mcmc, pickands_from_eta,
                      predictive_exceedance)
from .qregion import BasicSet, QuantileRegion, q_star, quantile_region, xi_S
from .tailprob import (FailureRegion, failure_probability,
                       joint_return_level, joint_tail_probability,
                       sample_angular, sample_bivariate, stable_tail_L,
                       tail_copula_R)

__version__ = "0.1.0"
