"""Tripartite continuous-variable entanglement witnesses and models.

Submodules: :mod:`~tripartite.gaussian` (moment tables), :mod:`~tripartite.criteria`
(VLF, Duan and EPR witnesses), :mod:`~tripartite.beamsplitter`,
:mod:`~tripartite.opo`, :mod:`~tripartite.undepleted`,
:mod:`~tripartite.positivep`, :mod:`~tripartite.intracavity` and the
command-line front end :mod:`~tripartite.cli`.
"""

__version__ = "0.1.0"
