"""
Module for simple file-based key-value storage of run artifacts.

Keys are file names inside one directory and values are the file contents. The
CLI stores codebooks, bounds and simulation reports through this class, and reads
codebooks back with it.

Classes:
    FileRepository:
        A key-value store implemented on top of a directory.

Imports:
    - pathlib: For path manipulations.
    - typing: For type annotations.
"""

from pathlib import Path
from typing import Union


class FileRepository:
    """
    A file-based key-value store where keys correspond to filenames and values to file contents.

    Attributes
    ----------
    path : Path
        The directory path where the files are stored.

    Methods
    -------
    __getitem__(key: str) -> str:
        Retrieve the content of a file (value) based on its name (key).

    __setitem__(key: Union[str, Path], val: str):
        Set or update the content of a file in the repository.

    Note:
    -----
    Keys must stay inside the directory; keys starting with "../" are refused.
    """

    def __init__(self, path: Union[str, Path], create: bool = True):
        """
        Initialize the repository.

        Parameters
        ----------
        path : Union[str, Path]
            The directory holding the files.
        create : bool
            Create the directory (and parents) when missing; otherwise a missing
            directory is an error.

        Raises
        ------
        FileNotFoundError
            If ``create`` is False and the directory does not exist.
        """
        self.path: Path = Path(path).absolute()

        if create:
            self.path.mkdir(parents=True, exist_ok=True)
        elif not self.path.is_dir():
            raise FileNotFoundError(f"Output directory '{self.path}' does not exist")

    def __getitem__(self, key: str) -> str:
        """
        Get the content of a file in the repository.

        Parameters
        ----------
        key : str
            The name of the file to get the content of.

        Returns
        -------
        str
            The content of the file.

        Raises
        ------
        KeyError
            If the file does not exist in the repository.
        """
        full_path = self.path / key

        if not full_path.is_file():
            raise KeyError(f"File '{key}' could not be found in '{self.path}'")
        with full_path.open("r", encoding="utf-8") as f:
            return f.read()

    def __setitem__(self, key: Union[str, Path], val: str) -> None:
        """
        Set the content of a file in the repository.

        Parameters
        ----------
        key : Union[str, Path]
            The name of the file to set the content of.
        val : str
            The content to set.

        Raises
        ------
        ValueError
            If the key points outside the directory.
        """
        if str(key).startswith("../"):
            raise ValueError(f"File name {key} attempted to access parent path.")

        assert isinstance(val, str), "val must be str"

        full_path = self.path / key
        full_path.parent.mkdir(parents=True, exist_ok=True)

        full_path.write_text(val, encoding="utf-8")

