# this file is needed here to include configs when building the project as a package
