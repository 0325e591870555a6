"""Static figure rendering for simulator CSV outputs; display only."""

from .recipes import RECIPES, FigureRecipe, recipe_by_id, render_all
from .tables import Table, TableError, read_table

__version__ = "0.1.0"
