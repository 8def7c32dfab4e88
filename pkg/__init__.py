import src.Cells as Cells
import src.Data as Data
import src.Harness as Harness

from src import *
